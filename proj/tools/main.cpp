#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "robosynth/runtime.hpp"

using namespace robosynth;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SceneFile load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_scene(in);
}

void print_violations(const std::vector<Violation>& vs, std::ostream& os) {
  for (const auto& v : vs) {
    os << to_string(v.rule) << ' ' << v.span.line << ':' << v.span.column << ' ' << v.message << '\n';
  }
}

int cmd_run(const std::string& scene_path, const std::string& program_path, std::uint64_t seed,
            bool strict_unknown, bool force) {
  const SceneFile scene = load_scene(scene_path);
  BehaviorProgram prog;
  try {
    prog = parse_program(slurp(program_path));
  } catch (const SyntaxError& e) {
    std::cerr << program_path << ':' << e.what() << '\n';
    return 2;
  }
  const auto violations = verify(prog, scene.state.workspace);
  if (!violations.empty()) {
    print_violations(violations, std::cerr);
    if (!force) {
      std::cerr << "refused: program has " << violations.size() << " violation(s); use --force to run anyway\n";
      return 3;
    }
  }
  InterpretOptions opt;
  opt.seed = seed;
  opt.unknown = strict_unknown ? UnknownPolicy::occupied : UnknownPolicy::free;
  const ExecutionReport rep = interpret(prog, scene.state, scene.tasks.tasks, opt);
  write_report(std::cout, rep);
  return rep.success ? 0 : 1;
}

int cmd_verify(const std::string& program_path) {
  BehaviorProgram prog;
  try {
    prog = parse_program(slurp(program_path));
  } catch (const SyntaxError& e) {
    std::cerr << program_path << ':' << e.what() << '\n';
    return 2;
  }
  const auto vs = verify(prog);
  if (vs.empty()) {
    std::cout << "clean\n";
    return 0;
  }
  print_violations(vs, std::cout);
  return 1;
}

int cmd_gen(std::uint64_t seed, const std::string& config, const std::string& out_path) {
  std::ifstream probe(config);
  const SceneConfig cfg = probe ? parse_scene_config(slurp(config)) : family_config(config);
  const SceneFile scene = generate_scene(seed, cfg);
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write '" + out_path + "'");
  write_scene(out, scene);
  std::cout << "wrote " << out_path << ": " << scene.state.objects.size() << " objects, "
            << scene.tasks.tasks.size() << " task(s)\n";
  return 0;
}

int cmd_render(const std::string& scene_path, bool percepts) {
  const SceneFile scene = load_scene(scene_path);
  const RenderResult rr = render_views(scene.state, scene.state.cameras);
  for (const auto& img : rr.images) {
    std::size_t hits = 0;
    double near = std::numeric_limits<double>::infinity(), far = 0.0;
    for (double d : img.depth) {
      if (d > 0.0) {
        ++hits;
        near = std::min(near, d);
        far = std::max(far, d);
      }
    }
    std::cout << "view " << img.view_id << ' ' << img.width << 'x' << img.height << " valid " << hits;
    if (hits) std::cout << " depth " << near << ".." << far;
    std::cout << '\n';
  }
  for (std::size_t i = 0; i < rr.detections.size(); ++i) {
    const auto& d = rr.detections[i];
    std::cout << "detection view " << d.view_id << ' ' << d.label << " (" << rr.detected_objects[i] << ") box "
              << d.box.u_min << ' ' << d.box.v_min << ' ' << d.box.u_max << ' ' << d.box.v_max << " pixels "
              << d.mask.size() << '\n';
  }
  if (percepts) {
    MatchOptions mo;
    mo.part_labeler = make_part_labeler(scene.state);
    const InterpretOptions defaults;
    mo.max_pixels_per_box = defaults.max_pixels_per_box;
    mo.containment_threshold = defaults.containment_threshold;
    const MatchResult mr = match_views(rr.detections, rr.images, mo);
    write_percepts(std::cout, mr.percepts);
    for (const auto& w : mr.warnings) std::cout << "# warning: " << w << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robosynth: behavior program runtime and scene tools"};
  app.require_subcommand(1);

  std::string scene, program, config, out;
  std::uint64_t seed = 0;
  bool strict_unknown = false, force = false, percepts = false;

  auto* run = app.add_subcommand("run", "execute a behavior program against a scene");
  run->add_option("--scene", scene, "scene file")->required();
  run->add_option("--program", program, "program file")->required();
  run->add_option("--seed", seed, "seed for sampling");
  run->add_flag("--strict-unknown", strict_unknown, "treat unobserved space as occupied");
  run->add_flag("--force", force, "run even if verification reports violations");

  auto* ver = app.add_subcommand("verify", "statically check a behavior program");
  ver->add_option("--program", program, "program file")->required();

  auto* gen = app.add_subcommand("gen-scene", "generate a scene");
  gen->add_option("--seed", seed, "generator seed")->required();
  gen->add_option("--config", config, "JSON config file or family name")->required();
  gen->add_option("--out", out, "output scene file")->required();

  auto* ren = app.add_subcommand("render", "render a scene and list detections");
  ren->add_option("--scene", scene, "scene file")->required();
  ren->add_flag("--percepts", percepts, "also fuse views into object percepts");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(scene, program, seed, strict_unknown, force);
    if (*ver) return cmd_verify(program);
    if (*gen) return cmd_gen(seed, config, out);
    if (*ren) return cmd_render(scene, percepts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
