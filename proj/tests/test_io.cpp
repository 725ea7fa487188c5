#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "propsim/io.hpp"
#include "test_helpers.hpp"

using namespace propsim;
namespace fs = std::filesystem;

namespace {

/// Scratch directory for generated inputs, removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("propsim_io_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name, const std::string& content) const {
    const std::string p = (path / name).string();
    std::ofstream out(p);
    out << content;
    return p;
  }
};

const char* kSliderRobot = R"({
  "links": [{"name": "hand", "mass": 0.3, "inertia": [1e-4, 1e-4, 1e-4, 0, 0, 0]}],
  "joints": [{"name": "slide", "kind": "prismatic", "axis": [1, 0, 0],
              "parent": "world", "child": "hand"}]
})";

std::string data_file(const std::string& name) {
  return std::string(PROPSIM_TEST_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round-trips exactly") {
  const double cases[] = {0.0,    -0.0,   1.0,   3.141592653589793,
                          1e-300, -1e300, 0.1,   5e-324,
                          1.0 / 3.0,      9007199254740993.0};
  for (double v : cases) {
    const std::string s = format_double(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &v, sizeof(double)) == 0);
  }
}

TEST_CASE("robot fixture loads with joints reordered parents-first") {
  std::vector<std::string> warnings;
  const KinematicTree tree = load_robot(data_file("arm.json"), true, &warnings);
  CHECK(warnings.empty());
  CHECK(tree.name == "arm2");
  REQUIRE(tree.bodies.size() == 2);
  // The file lists the elbow joint and forearm link first; emission must
  // still order parents before children.
  CHECK(tree.bodies[0].name == "upper");
  CHECK(tree.bodies[1].name == "forearm");
  REQUIRE(tree.joints.size() == 2);
  CHECK(tree.joints[0].name == "shoulder");
  CHECK(tree.joints[0].parent == -1);
  CHECK(tree.joints[1].name == "elbow");
  CHECK(tree.joints[1].parent == 0);
  CHECK(tree.joints[1].damping == doctest::Approx(0.01));
  CHECK(tree.joints[1].rest.p.z == doctest::Approx(-0.12));
  CHECK(tree.n_dof == 2);
  const auto names = tree.dof_names();
  CHECK(names[0] == "shoulder");
  CHECK(names[1] == "elbow");
}

TEST_CASE("locked joints drop out of the DoF list") {
  TempDir dir;
  const std::string path = dir.file("locked.json", R"({
    "links": [
      {"name": "a", "mass": 0.1, "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]},
      {"name": "b", "mass": 0.1, "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]}
    ],
    "joints": [
      {"name": "j1", "kind": "revolute", "axis": [0, 1, 0], "parent": "world", "child": "a"},
      {"name": "j2", "kind": "revolute", "axis": [0, 1, 0], "parent": "a", "child": "b"}
    ],
    "locked": ["j2"]
  })");
  const KinematicTree tree = load_robot(path, true);
  CHECK(tree.n_dof == 1);
  CHECK(tree.joints[1].locked);
  CHECK(tree.dof_names() == std::vector<std::string>{"j1"});
}

TEST_CASE("lenient mode repairs unknown keys and non-unit axes") {
  TempDir dir;
  const std::string path = dir.file("fuzzy.json", R"({
    "extar": 1,
    "links": [{"name": "a", "mass": 0.1, "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]}],
    "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 2],
                "parent": "world", "child": "a"}]
  })");
  std::vector<std::string> warnings;
  const KinematicTree tree = load_robot(path, false, &warnings);
  REQUIRE(warnings.size() == 2);
  CHECK(warnings[0].find("unknown key 'extar'") != std::string::npos);
  CHECK(warnings[0].find("(ignored)") != std::string::npos);
  CHECK(warnings[1].find("normalized non-unit axis") != std::string::npos);
  CHECK(tree.joints[0].axis.z == doctest::Approx(1.0));

  CHECK_THROWS_WITH_AS(load_robot(path, true),
                       doctest::Contains("unknown key 'extar'"), ParseError);

  const std::string axis_only = dir.file("axis.json", R"({
    "links": [{"name": "a", "mass": 0.1, "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]}],
    "joints": [{"name": "j", "kind": "revolute", "axis": [0, 0, 2],
                "parent": "world", "child": "a"}]
  })");
  CHECK_THROWS_WITH_AS(load_robot(axis_only, true),
                       doctest::Contains("'axis' must be a unit vector"),
                       ParseError);
}

TEST_CASE("malformed robots raise targeted parse errors") {
  struct Case {
    const char* label;
    const char* json;
    const char* expect;
  };
  const char* link_a =
      R"({"name": "a", "mass": 0.1, "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]})";
  const std::string two_links = std::string(R"([)") + link_a +
                                R"(, {"name": "b", "mass": 0.1,
       "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]}])";
  const std::vector<Case> cases = {
      {"syntax", "{ this is not json", "parse_error"},
      {"empty links", R"({"links": [], "joints": [{}]})",
       "links: must be a non-empty array"},
      {"missing joints",
       R"({"links": [{"name": "a", "mass": 0.1,
           "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]}]})",
       "joints: must be a non-empty array"},
      {"nameless link", R"({"links": [{"mass": 1}], "joints": [{}]})",
       "missing 'name'"},
      {"negative mass",
       R"({"links": [{"name": "a", "mass": -0.5}], "joints": [{}]})",
       "'mass' must be non-negative"},
      {"inertia arity",
       R"({"links": [{"name": "a", "mass": 0.1, "inertia": [1, 2, 3]}],
           "joints": [{}]})",
       "'inertia' must be [ixx, iyy, izz, ixy, ixz, iyz]"},
      {"indefinite inertia",
       R"({"links": [{"name": "a", "mass": 0.1,
           "inertia": [-1e-4, 2e-4, 2e-4, 0, 0, 0]}], "joints": [{}]})",
       "not positive semidefinite"},
      {"unrealizable inertia",
       R"({"links": [{"name": "a", "mass": 0.1,
           "inertia": [1e-4, 1e-4, 3e-4, 0, 0, 0]}], "joints": [{}]})",
       "violates the triangle inequality"},
      {"duplicate link",
       R"({"links": [{"name": "a", "mass": 0.1}, {"name": "a", "mass": 0.1}],
           "joints": [{}]})",
       "duplicate link name 'a'"},
  };
  // Joint-level failures share one valid link list.
  auto robot = [&](const std::string& joints) {
    return std::string(R"({"links": )") + two_links + R"(, "joints": )" +
           joints + "}";
  };
  const std::vector<Case> joint_cases = {
      {"unknown kind",
       R"([{"name": "j", "kind": "helical", "parent": "world", "child": "a"}])",
       "unknown joint type 'helical'"},
      {"negative damping",
       R"([{"name": "j", "kind": "fixed", "parent": "world", "child": "a",
            "damping": -1}])",
       "'damping' must be non-negative"},
      {"zero axis",
       R"([{"name": "j", "kind": "revolute", "axis": [0, 0, 0],
            "parent": "world", "child": "a"}])",
       "'axis' must be non-zero"},
      {"bogus parent",
       R"([{"name": "j", "kind": "fixed", "parent": "ghost", "child": "a"}])",
       "parent 'ghost' is not 'world' or a link"},
      {"bogus child",
       R"([{"name": "j", "kind": "fixed", "parent": "world", "child": "ghost"}])",
       "child 'ghost' is not a link"},
      {"self loop",
       R"([{"name": "j", "kind": "fixed", "parent": "a", "child": "a"}])",
       "joint connects 'a' to itself"},
      {"duplicate joint",
       R"([{"name": "j", "kind": "fixed", "parent": "world", "child": "a"},
           {"name": "j", "kind": "fixed", "parent": "world", "child": "b"}])",
       "duplicate joint name 'j'"},
      {"two parents",
       R"([{"name": "j1", "kind": "fixed", "parent": "world", "child": "a"},
           {"name": "j2", "kind": "fixed", "parent": "world", "child": "a"}])",
       "link 'a' is the child of two joints"},
      {"orphan link",
       R"([{"name": "j1", "kind": "fixed", "parent": "world", "child": "a"}])",
       "link 'b' has no inbound joint"},
      {"cycle",
       R"([{"name": "j1", "kind": "fixed", "parent": "a", "child": "b"},
           {"name": "j2", "kind": "fixed", "parent": "b", "child": "a"}])",
       "joint graph contains a cycle"},
      {"locked type",
       R"([{"name": "j1", "kind": "fixed", "parent": "world", "child": "a"},
           {"name": "j2", "kind": "fixed", "parent": "a", "child": "b"}],
           "locked": 7)",
       "must be an array of joint names"},
      {"locked unknown",
       R"([{"name": "j1", "kind": "fixed", "parent": "world", "child": "a"},
           {"name": "j2", "kind": "fixed", "parent": "a", "child": "b"}],
           "locked": ["zap"])",
       "unknown joint 'zap'"},
  };

  TempDir dir;
  int n = 0;
  auto run = [&](const Case& c, const std::string& text) {
    INFO(c.label);
    const std::string path =
        dir.file("bad_" + std::to_string(n++) + ".json", text);
    CHECK_THROWS_WITH_AS(load_robot(path), doctest::Contains(c.expect),
                         ParseError);
  };
  for (const Case& c : cases) run(c, c.json);
  for (const Case& c : joint_cases) run(c, robot(c.json));
  CHECK_THROWS_WITH_AS(load_robot((dir.path / "nope.json").string()),
                       doctest::Contains("cannot open file"), ParseError);
}

TEST_CASE("scenario fixture wires a runnable robot-only setup") {
  std::vector<std::string> warnings;
  ScenarioFile sf =
      load_scenario(data_file("arm_scenario.json"), true, &warnings);
  CHECK(warnings.empty());
  Scenario& sc = sf.scenario;
  CHECK(sc.name == "arm_scenario");  // defaults to the file stem
  CHECK(sc.kind == ScenarioKind::RobotOnly);
  CHECK(sc.prepared);
  CHECK(sc.sim_tree.n_dof == 2);
  CHECK(sc.config.substeps == 8);
  REQUIRE(sc.torques.per_dof.size() == 2);
  CHECK(sc.torques.per_dof[0].size() == 1);
  CHECK(sc.torques.per_dof[1].size() == 2);
  CHECK(sc.torques.per_dof[1][1].t_on == doctest::Approx(0.05));
  REQUIRE(sc.q0.size() == 2);
  CHECK(sc.q0[1] == doctest::Approx(-0.2));
  CHECK(!sf.has_calibration);
  const Trajectory traj = simulate(sc);
  CHECK(traj.frame_count() == 16);  // 0.25 s at 60 fps, plus frame zero
  CHECK(traj.channels == std::vector<std::string>{"shoulder", "elbow"});
}

TEST_CASE("scenario files resolve and validate their pieces") {
  TempDir dir;
  dir.file("slider.json", kSliderRobot);
  auto scen = [&](const std::string& name, const std::string& body) {
    return dir.file(name, body);
  };

  struct Case {
    const char* label;
    std::string json;
    const char* expect;
  };
  const std::vector<Case> cases = {
      {"unknown kind", R"({"kind": "wiggle", "robot": "slider.json"})",
       "unknown scenario kind 'wiggle'"},
      {"missing robot file", R"({"kind": "robot_only", "robot": "ghost.json"})",
       "cannot open file"},
      {"fixed_object needs object",
       R"({"kind": "fixed_object", "robot": "slider.json"})",
       "object: required for this scenario kind"},
      {"container needs container",
       R"({"kind": "container", "robot": "slider.json",
           "object": {"name": "shell", "mass": 0.05, "attach_to": "hand"}})",
       "container: required for this scenario kind"},
      {"squeeze needs soft", R"({"kind": "squeeze", "robot": "slider.json"})",
       "soft: required for this scenario kind"},
      {"one pad",
       R"({"kind": "squeeze", "robot": "slider.json",
           "soft": {"cells": [1, 1, 1], "spacing": 0.01, "k_mu": 500,
                    "k_lambda": 200, "pads": ["hand"]}})",
       "must name exactly two pad bodies"},
      {"pad extent shape",
       R"({"kind": "squeeze", "robot": "slider.json",
           "soft": {"cells": [1, 1, 1], "spacing": 0.01, "k_mu": 500,
                    "k_lambda": 200, "pads": ["hand", "hand"],
                    "pad_half_extents": [0.01]}})",
       "must be [hy, hz] or [[hy, hz], [hy, hz]]"},
      {"pad extent sign",
       R"({"kind": "squeeze", "robot": "slider.json",
           "soft": {"cells": [1, 1, 1], "spacing": 0.01, "k_mu": 500,
                    "k_lambda": 200, "pads": ["hand", "hand"],
                    "pad_half_extents": [[0.01, 0.01], [0.01, -0.01]]}})",
       "half extents must be positive"},
      {"negative t_on",
       R"({"kind": "robot_only", "robot": "slider.json",
           "torques": [{"offset": 0.1, "t_on": -0.5}]})",
       "'t_on' must be non-negative"},
      {"empty window",
       R"({"kind": "robot_only", "robot": "slider.json",
           "torques": [{"offset": 0.1, "t_on": 0.2, "t_off": 0.2}]})",
       "'t_off' must exceed 't_on'"},
      {"substep bound",
       R"({"kind": "robot_only", "robot": "slider.json",
           "config": {"substeps": 100}})",
       "substeps must lie in [4, 64]"},
      {"friction bound",
       R"({"kind": "robot_only", "robot": "slider.json",
           "config": {"contact": {"mu": 5.0}}})",
       "friction coefficient above sanity bound 2"},
      {"state size",
       R"({"kind": "robot_only", "robot": "slider.json", "q0": [0, 0, 0]})",
       "initial state size does not match DoF count"},
      {"unknown parameter",
       R"({"kind": "robot_only", "robot": "slider.json",
           "calibrate": {"params": [{"name": "object.volume"}]}})",
       "unknown parameter 'object.volume'"},
      {"flat starts with two params",
       R"({"kind": "robot_only", "robot": "slider.json",
           "calibrate": {"params": [{"name": "material.k_mu"},
                                    {"name": "material.k_lambda"}],
                         "optimizer": {"start_values": [1, 2]}}})",
       "flat start lists need exactly one parameter"},
      {"ragged starts",
       R"({"kind": "robot_only", "robot": "slider.json",
           "calibrate": {"params": [{"name": "material.k_mu"},
                                    {"name": "material.k_lambda"}],
                         "optimizer": {"start_values": [[1, 2], [3]]}}})",
       "each start needs one value per parameter"},
      {"negative start",
       R"({"kind": "robot_only", "robot": "slider.json",
           "calibrate": {"params": [{"name": "object.mass"}],
                         "optimizer": {"start_values": [0.1, -0.2]}}})",
       "entries must be non-negative"},
      {"empty loss channels",
       R"({"kind": "robot_only", "robot": "slider.json",
           "calibrate": {"params": [{"name": "object.mass"}],
                         "loss": {"channels": []}}})",
       "must be a non-empty array of channel names"},
  };
  int n = 0;
  for (const Case& c : cases) {
    INFO(c.label);
    const std::string path = scen("s" + std::to_string(n++) + ".json", c.json);
    // Catch the common base: most cases surface as ParseError, but nested
    // validators (e.g. contact params) may throw plain Error.
    CHECK_THROWS_WITH_AS(load_scenario(path), doctest::Contains(c.expect),
                         Error);
  }

  // The reference CSV path resolves relative to the scenario file.
  const std::string with_ref = scen("with_ref.json", R"({
    "kind": "robot_only", "robot": "slider.json",
    "calibrate": {"params": [{"name": "object.mass", "init": 0.05}],
                  "reference": "ref.csv"}
  })");
  const ScenarioFile sf = load_scenario(with_ref);
  CHECK(sf.has_calibration);
  REQUIRE(sf.calib.params.size() == 1);
  CHECK(sf.calib.params[0].init == doctest::Approx(0.05));
  CHECK(fs::path(sf.calib.reference) == dir.path / "ref.csv");
}

TEST_CASE("container scenario block fills the ball and derives inertia") {
  TempDir dir;
  dir.file("slider.json", kSliderRobot);
  const std::string path = dir.file("shake.json", R"({
    "kind": "container", "robot": "slider.json",
    "record_object_position": true,
    "object": {"name": "shell", "mass": 0.05, "attach_to": "hand",
               "inertia": [1e-5, 1e-5, 1e-5, 0, 0, 0]},
    "container": {"half_extents": [0.03, 0.03, 0.03],
                  "ball": {"mass": 0.012, "radius": 0.01,
                           "start_xyz": [0, 0, -0.015]}}
  })");
  const ScenarioFile sf = load_scenario(path);
  const Scenario& sc = sf.scenario;
  CHECK(sc.kind == ScenarioKind::Container);
  CHECK(sc.record_object);
  CHECK(sc.attach_body == "hand");
  CHECK(sc.ball.name == "ball");  // default
  CHECK(sc.ball_radius == doctest::Approx(0.01));
  CHECK(sc.ball_solid_sphere);  // no explicit inertia given
  const double moment = 0.4 * 0.012 * 0.01 * 0.01;
  CHECK(sc.ball.inertia(2, 2).value() == doctest::Approx(moment));
  CHECK(sc.ball_start.p.z == doctest::Approx(-0.015));
}

TEST_CASE("csv save and load round-trip 1000 randomized trajectories") {
  TempDir dir;
  auto& rng = pt::test_rng(2024);
  const double rates[] = {30.0, 40.0, 60.0, 120.0, 17.5};
  for (int trial = 0; trial < 1000; ++trial) {
    Trajectory traj;
    traj.fps = rates[trial % 5];
    const int n_ch = 1 + static_cast<int>(pt::uniform(rng, 0.0, 5.999));
    for (int c = 0; c < n_ch; ++c)
      traj.channels.push_back("ch" + std::to_string(c));
    const int n_fr = 2 + static_cast<int>(pt::uniform(rng, 0.0, 38.999));
    for (int f = 0; f < n_fr; ++f) {
      std::vector<DScalar> row;
      for (int c = 0; c < n_ch; ++c) {
        if (pt::uniform(rng, 0.0, 1.0) < 0.05) {
          row.push_back(DScalar(0.0));
          continue;
        }
        const double mag = std::pow(10.0, pt::uniform(rng, -12.0, 6.0));
        const double sign = pt::uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        row.push_back(DScalar(sign * mag * pt::uniform(rng, 0.5, 1.5)));
      }
      traj.frames.push_back(std::move(row));
    }
    const std::string path = dir.file("rt.csv", "");
    save_trajectory_csv(path, traj);
    std::vector<std::string> warnings;
    const RefTrajectory back =
        load_trajectory_csv(path, traj.fps, false, &warnings);
    CHECK(warnings.empty());
    REQUIRE(back.channels == traj.channels);
    REQUIRE(back.frame_count() == traj.frame_count());
    CHECK(back.fps == doctest::Approx(traj.fps).epsilon(1e-12));
    for (long f = 0; f < back.frame_count(); ++f)
      for (int c = 0; c < n_ch; ++c) {
        // %.17g guarantees bit-exact recovery.
        CHECK(back.frames[f][c] == traj.frames[f][c].value());
      }
  }
}

TEST_CASE("a 40 Hz reference resamples onto 60 Hz with a warning") {
  std::vector<std::string> warnings;
  const RefTrajectory traj =
      load_trajectory_csv(data_file("ref_40hz.csv"), 60.0, false, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("resampled 21 frames at 40.000000 Hz to 31 frames "
                         "at 60.000000 Hz") != std::string::npos);
  CHECK(traj.fps == doctest::Approx(60.0));
  REQUIRE(traj.channels == std::vector<std::string>{"lift", "reach"});
  REQUIRE(traj.frame_count() == 31);
  // The fixture stores affine channels, which linear resampling reproduces
  // exactly up to roundoff.
  for (long k = 0; k < traj.frame_count(); ++k) {
    const double t = std::min(k / 60.0, 0.5);
    CHECK(traj.frames[k][0] == doctest::Approx(2.0 * t + 1.0).epsilon(1e-12));
    CHECK(traj.frames[k][1] == doctest::Approx(-0.5 * t).epsilon(1e-12));
  }

  CHECK_THROWS_WITH_AS(
      load_trajectory_csv(data_file("ref_40hz.csv"), 60.0, true),
      doctest::Contains("Hz is required (strict mode)"), ParseError);

  // At its native rate the file loads untouched.
  warnings.clear();
  const RefTrajectory native =
      load_trajectory_csv(data_file("ref_40hz.csv"), 40.0, false, &warnings);
  CHECK(warnings.empty());
  CHECK(native.frame_count() == 21);
  const RefTrajectory keep =
      load_trajectory_csv(data_file("ref_40hz.csv"), 0.0, false, &warnings);
  CHECK(keep.fps == doctest::Approx(40.0));
}

TEST_CASE("malformed csv inputs raise targeted errors") {
  TempDir dir;
  struct Case {
    const char* label;
    const char* text;
    const char* expect;
  };
  const std::vector<Case> cases = {
      {"bad header", "x,a\n0,1\n0.1,2\n", "expected 't,<channel>,...'"},
      {"time only", "t\n0\n0.1\n", "expected 't,<channel>,...'"},
      {"empty channel", "t,,b\n0,1,2\n0.1,1,2\n", "empty channel name"},
      {"duplicate channel", "t,a,a\n0,1,2\n0.1,1,2\n", "duplicate channel 'a'"},
      {"ragged row", "t,a,b\n0,1,2\n0.1,1\n", "expected 3 cells, found 2"},
      {"trailing comma", "t,a\n0,1\n0.1,1,\n", "expected 2 cells, found 3"},
      {"word cell", "t,a\n0,1\n0.1,zebra\n", "cell 'zebra' is not a finite number"},
      {"infinite cell", "t,a\n0,1\n0.1,inf\n", "cell 'inf' is not a finite number"},
      {"single row", "t,a\n0,1\n", "need at least two rows"},
      {"empty file", "", "empty file"},
      {"time goes backwards", "t,a\n0,1\n0.1,1\n0.05,1\n",
       "time column must be strictly increasing"},
      {"jittered clock", "t,a\n0,1\n0.1,1\n0.25,1\n",
       "time column is not uniformly sampled"},
  };
  int n = 0;
  for (const Case& c : cases) {
    INFO(c.label);
    const std::string path =
        dir.file("bad" + std::to_string(n++) + ".csv", c.text);
    CHECK_THROWS_WITH_AS(load_trajectory_csv(path, 60.0),
                         doctest::Contains(c.expect), ParseError);
  }
  CHECK_THROWS_WITH_AS(load_trajectory_csv((dir.path / "nope.csv").string(), 0),
                       doctest::Contains("cannot open file"), ParseError);

  // Forgiving bits: blank lines and CR line endings are tolerated.
  const std::string soft = dir.file("soft.csv", "t,a\r\n0,1\r\n\r\n0.1,2\r\n\n");
  const RefTrajectory traj = load_trajectory_csv(soft, 0.0);
  CHECK(traj.frame_count() == 2);
  CHECK(traj.frames[1][0] == 2.0);
}

TEST_CASE("saved timestamps come from the frame index") {
  TempDir dir;
  Trajectory traj;
  traj.fps = 50.0;
  traj.channels = {"a", "b"};
  for (int f = 0; f < 3; ++f)
    traj.frames.push_back({DScalar(f * 1.5), DScalar(-f * 0.25)});
  const std::string path = dir.file("out.csv", "");
  save_trajectory_csv(path, traj);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,a,b");
  std::getline(in, line);
  CHECK(line == "0,0,0");
  std::getline(in, line);
  CHECK(line.substr(0, 5) == "0.02,");

  CHECK_THROWS_WITH_AS(
      save_trajectory_csv((dir.path / "no_dir" / "x.csv").string(), traj),
      doctest::Contains("cannot write"), Error);
}

}  // TEST_SUITE
