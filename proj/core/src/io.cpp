#include "propsim/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace propsim {
namespace {

using nlohmann::json;

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "", "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, "", e.what());
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& file, const std::string& where, bool strict,
                std::vector<std::string>* warnings) {
  if (!obj.is_object()) throw ParseError(file, where, "expected an object");
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key())) continue;
    const std::string msg = where + ": unknown key '" + item.key() + "'";
    if (strict) throw ParseError(file, where, "unknown key '" + item.key() + "'");
    warn(warnings, file + ": " + msg + " (ignored)");
  }
}

double get_num(const json& obj, const std::string& key, const std::string& file,
               const std::string& where) {
  if (!obj.contains(key)) throw ParseError(file, where, "missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ParseError(file, where, "'" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(file, where, "'" + key + "' must be finite");
  return d;
}

double get_num_or(const json& obj, const std::string& key, double fallback,
                  const std::string& file, const std::string& where) {
  return obj.contains(key) ? get_num(obj, key, file, where) : fallback;
}

bool get_bool_or(const json& obj, const std::string& key, bool fallback,
                 const std::string& file, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean())
    throw ParseError(file, where, "'" + key + "' must be a boolean");
  return obj.at(key).get<bool>();
}

std::string get_str(const json& obj, const std::string& key,
                    const std::string& file, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(file, where, "missing '" + key + "'");
  if (!obj.at(key).is_string())
    throw ParseError(file, where, "'" + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

Vec3r get_vec3(const json& obj, const std::string& key, const std::string& file,
               const std::string& where) {
  if (!obj.contains(key)) throw ParseError(file, where, "missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3)
    throw ParseError(file, where, "'" + key + "' must be an array of 3 numbers");
  Vec3r r;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number())
      throw ParseError(file, where, "'" + key + "' must be an array of 3 numbers");
    r[i] = v[i].get<double>();
    if (!std::isfinite(r[i]))
      throw ParseError(file, where, "'" + key + "' must be finite");
  }
  return r;
}

Vec3r get_vec3_or(const json& obj, const std::string& key, const Vec3r& fallback,
                  const std::string& file, const std::string& where) {
  return obj.contains(key) ? get_vec3(obj, key, file, where) : fallback;
}

PoseR parse_origin(const json& obj, const std::string& file,
                   const std::string& where, bool strict,
                   std::vector<std::string>* warnings) {
  PoseR pose;
  if (!obj.contains("origin")) return pose;
  const json& o = obj.at("origin");
  check_keys(o, {"xyz", "rpy"}, file, where + ".origin", strict, warnings);
  pose.p = get_vec3_or(o, "xyz", Vec3r(0, 0, 0), file, where + ".origin");
  pose.R = rotation_rpy(get_vec3_or(o, "rpy", Vec3r(0, 0, 0), file, where + ".origin"));
  return pose;
}

/// Inertia given as [ixx, iyy, izz, ixy, ixz, iyz]; must be realizable
/// (positive semidefinite with principal moments obeying the triangle
/// inequality) whenever the mass is positive.
Mat3r parse_inertia(const json& obj, double mass, const std::string& file,
                    const std::string& where) {
  Mat3r inertia = Mat3r::zero();
  if (obj.contains("inertia")) {
    const json& v = obj.at("inertia");
    if (!v.is_array() || v.size() != 6)
      throw ParseError(file, where,
                       "'inertia' must be [ixx, iyy, izz, ixy, ixz, iyz]");
    double c[6];
    for (int i = 0; i < 6; ++i) {
      if (!v[i].is_number())
        throw ParseError(file, where, "'inertia' entries must be numbers");
      c[i] = v[i].get<double>();
      if (!std::isfinite(c[i]))
        throw ParseError(file, where, "'inertia' entries must be finite");
    }
    inertia(0, 0) = c[0]; inertia(1, 1) = c[1]; inertia(2, 2) = c[2];
    inertia(0, 1) = inertia(1, 0) = c[3];
    inertia(0, 2) = inertia(2, 0) = c[4];
    inertia(1, 2) = inertia(2, 1) = c[5];
  }
  std::vector<double> flat(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) flat[i * 3 + j] = inertia(i, j);
  std::vector<double> eig;
  sym_eigen(3, flat, &eig, nullptr);
  std::sort(eig.begin(), eig.end());
  const double scale = std::max({std::abs(eig[0]), std::abs(eig[2]), 1e-30});
  if (eig[0] < -1e-9 * scale)
    throw ParseError(file, where, "'inertia' is not positive semidefinite");
  if (mass > 0.0 && eig[0] + eig[1] < eig[2] - 1e-9 * scale)
    throw ParseError(file, where,
                     "'inertia' violates the triangle inequality on its "
                     "principal moments");
  return inertia;
}

JointType parse_joint_type(const std::string& s, const std::string& file,
                           const std::string& where) {
  if (s == "revolute") return JointType::Revolute;
  if (s == "prismatic") return JointType::Prismatic;
  if (s == "fixed") return JointType::Fixed;
  if (s == "free") return JointType::Free;
  throw ParseError(file, where, "unknown joint type '" + s + "'");
}

Body parse_body(const json& jb, const std::string& file,
                const std::string& where) {
  Body body;
  body.name = get_str(jb, "name", file, where);
  const double mass = get_num_or(jb, "mass", 0.0, file, where);
  if (mass < 0.0) throw ParseError(file, where, "'mass' must be non-negative");
  body.mass = DScalar(mass);
  body.com = promote(get_vec3_or(jb, "com", Vec3r(0, 0, 0), file, where));
  body.inertia = promote(parse_inertia(jb, mass, file, where));
  return body;
}

// -------------------------------------------------------------------------
// CSV helpers

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

KinematicTree load_robot(const std::string& path, bool strict,
                         std::vector<std::string>* warnings) {
  const json j = load_json(path);
  check_keys(j, {"name", "links", "joints", "locked"}, path, "robot", strict,
             warnings);
  const std::string name =
      j.contains("name") ? get_str(j, "name", path, "robot") : "robot";
  if (!j.contains("links") || !j.at("links").is_array() || j.at("links").empty())
    throw ParseError(path, "links", "must be a non-empty array");
  if (!j.contains("joints") || !j.at("joints").is_array() ||
      j.at("joints").empty())
    throw ParseError(path, "joints", "must be a non-empty array");

  std::vector<Body> links;
  for (const json& jl : j.at("links")) {
    const std::string where = "links[" + std::to_string(links.size()) + "]";
    check_keys(jl, {"name", "mass", "com", "inertia"}, path, where, strict,
               warnings);
    Body body = parse_body(jl, path, where);
    for (const Body& existing : links)
      if (existing.name == body.name)
        throw ParseError(path, where, "duplicate link name '" + body.name + "'");
    links.push_back(std::move(body));
  }
  auto link_index = [&](const std::string& link_name) {
    for (size_t i = 0; i < links.size(); ++i)
      if (links[i].name == link_name) return static_cast<int>(i);
    return -1;
  };

  // Joints reference links by name; `parent_link` keeps the name so the
  // tree can be ordered parents-first below regardless of file order.
  std::vector<Joint> joints;
  std::vector<std::string> parent_link;
  std::vector<int> child_link;
  for (const json& jj : j.at("joints")) {
    const std::string where = "joints[" + std::to_string(joints.size()) + "]";
    check_keys(jj, {"name", "kind", "axis", "parent", "child", "origin",
                    "damping"},
               path, where, strict, warnings);
    Joint joint;
    joint.name = get_str(jj, "name", path, where);
    for (const Joint& existing : joints)
      if (existing.name == joint.name)
        throw ParseError(path, where,
                         "duplicate joint name '" + joint.name + "'");
    joint.type =
        parse_joint_type(get_str(jj, "kind", path, where), path, where);
    joint.rest = parse_origin(jj, path, where, strict, warnings);
    joint.damping = get_num_or(jj, "damping", 0.0, path, where);
    if (joint.damping < 0.0)
      throw ParseError(path, where, "'damping' must be non-negative");

    if (joint.type == JointType::Revolute ||
        joint.type == JointType::Prismatic) {
      joint.axis = get_vec3(jj, "axis", path, where);
      const double n = joint.axis.norm();
      if (n < 1e-12)
        throw ParseError(path, where, "'axis' must be non-zero");
      if (std::abs(n - 1.0) > 1e-6) {
        if (strict)
          throw ParseError(path, where, "'axis' must be a unit vector");
        warn(warnings, path + ": " + where + ": normalized non-unit axis");
        joint.axis = joint.axis * (1.0 / n);
      } else if (n != 1.0) {
        joint.axis = joint.axis * (1.0 / n);
      }
    }

    const std::string parent = get_str(jj, "parent", path, where);
    if (parent != "world" && link_index(parent) < 0)
      throw ParseError(path, where,
                       "parent '" + parent + "' is not 'world' or a link");
    const std::string child = get_str(jj, "child", path, where);
    const int ci = link_index(child);
    if (ci < 0)
      throw ParseError(path, where, "child '" + child + "' is not a link");
    if (parent == child)
      throw ParseError(path, where, "joint connects '" + child + "' to itself");
    for (int existing : child_link)
      if (existing == ci)
        throw ParseError(path, where,
                         "link '" + child + "' is the child of two joints");
    parent_link.push_back(parent);
    child_link.push_back(ci);
    joints.push_back(std::move(joint));
  }
  for (size_t i = 0; i < links.size(); ++i)
    if (std::find(child_link.begin(), child_link.end(), static_cast<int>(i)) ==
        child_link.end())
      throw ParseError(path, "links",
                       "link '" + links[i].name + "' has no inbound joint");

  if (j.contains("locked")) {
    const json& jl = j.at("locked");
    if (!jl.is_array())
      throw ParseError(path, "locked", "must be an array of joint names");
    for (const json& e : jl) {
      if (!e.is_string())
        throw ParseError(path, "locked", "must be an array of joint names");
      const std::string jn = e.get<std::string>();
      bool found = false;
      for (Joint& joint : joints)
        if (joint.name == jn) {
          joint.locked = true;
          found = true;
        }
      if (!found)
        throw ParseError(path, "locked", "unknown joint '" + jn + "'");
    }
  }

  // Emit links parents-first (stable in file order) so each body's parent
  // precedes it; a leftover link means the joint graph has a cycle.
  KinematicTree tree;
  tree.name = name;
  std::vector<int> emitted_at(links.size(), -1);
  while (tree.bodies.size() < links.size()) {
    bool progressed = false;
    for (size_t ji = 0; ji < joints.size(); ++ji) {
      const int ci = child_link[ji];
      if (emitted_at[ci] >= 0) continue;
      int parent_body = -1;
      if (parent_link[ji] != "world") {
        const int pi = link_index(parent_link[ji]);
        if (emitted_at[pi] < 0) continue;  // parent not placed yet
        parent_body = emitted_at[pi];
      }
      emitted_at[ci] = static_cast<int>(tree.bodies.size());
      Joint joint = joints[ji];
      joint.parent = parent_body;
      tree.bodies.push_back(links[ci]);
      tree.joints.push_back(std::move(joint));
      progressed = true;
    }
    if (!progressed)
      throw ParseError(path, "joints", "joint graph contains a cycle");
  }
  tree.finalize();
  return tree;
}

namespace {

ContactParams parse_contact(const json& jc, const std::string& file,
                            bool strict, std::vector<std::string>* warnings) {
  ContactParams p;
  check_keys(jc, {"k_e", "k_d", "k_f", "mu", "allow_adhesion"}, file,
             "config.contact", strict, warnings);
  p.k_e = get_num_or(jc, "k_e", p.k_e, file, "config.contact");
  p.k_d = get_num_or(jc, "k_d", p.k_d, file, "config.contact");
  p.k_f = get_num_or(jc, "k_f", p.k_f, file, "config.contact");
  p.mu = get_num_or(jc, "mu", p.mu, file, "config.contact");
  p.allow_adhesion =
      get_bool_or(jc, "allow_adhesion", p.allow_adhesion, file, "config.contact");
  p.validate();
  return p;
}

std::vector<double> parse_number_array(const json& v, const std::string& file,
                                       const std::string& where) {
  if (!v.is_array()) throw ParseError(file, where, "must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ParseError(file, where, "must be an array of numbers");
    out.push_back(e.get<double>());
    if (!std::isfinite(out.back()))
      throw ParseError(file, where, "entries must be finite");
  }
  return out;
}

CalibrationSetup parse_calibration(const json& jc, const std::string& file,
                                   const std::filesystem::path& base_dir,
                                   bool strict,
                                   std::vector<std::string>* warnings) {
  CalibrationSetup setup;
  check_keys(jc, {"params", "optimizer", "cmaes", "loss", "reference"}, file,
             "calibrate", strict, warnings);
  if (!jc.contains("params") || !jc.at("params").is_array() ||
      jc.at("params").empty())
    throw ParseError(file, "calibrate.params", "must be a non-empty array");
  for (const json& jp : jc.at("params")) {
    const std::string where =
        "calibrate.params[" + std::to_string(setup.params.size()) + "]";
    check_keys(jp, {"name", "init", "lower", "upper"}, file, where, strict,
               warnings);
    ParamSpec spec;
    spec.name = get_str(jp, "name", file, where);
    spec.init = get_num_or(jp, "init", spec.init, file, where);
    spec.lower = get_num_or(jp, "lower", spec.lower, file, where);
    spec.upper = get_num_or(jp, "upper", spec.upper, file, where);
    try {
      spec.validate();
    } catch (const Error& e) {
      throw ParseError(file, where, e.what());
    }
    setup.params.push_back(std::move(spec));
  }
  if (jc.contains("optimizer")) {
    const json& jo = jc.at("optimizer");
    check_keys(jo,
               {"max_iters", "lr0", "lr_min", "beta1", "beta2", "eps", "ftol",
                "gtol", "patience", "starts", "start_span", "start_values"},
               file, "calibrate.optimizer", strict, warnings);
    OptimConfig& o = setup.optim;
    o.max_iters = static_cast<int>(
        get_num_or(jo, "max_iters", o.max_iters, file, "calibrate.optimizer"));
    o.lr0 = get_num_or(jo, "lr0", o.lr0, file, "calibrate.optimizer");
    o.lr_min = get_num_or(jo, "lr_min", o.lr_min, file, "calibrate.optimizer");
    o.beta1 = get_num_or(jo, "beta1", o.beta1, file, "calibrate.optimizer");
    o.beta2 = get_num_or(jo, "beta2", o.beta2, file, "calibrate.optimizer");
    o.eps = get_num_or(jo, "eps", o.eps, file, "calibrate.optimizer");
    o.ftol = get_num_or(jo, "ftol", o.ftol, file, "calibrate.optimizer");
    o.gtol = get_num_or(jo, "gtol", o.gtol, file, "calibrate.optimizer");
    o.patience = static_cast<int>(
        get_num_or(jo, "patience", o.patience, file, "calibrate.optimizer"));
    o.starts = static_cast<int>(
        get_num_or(jo, "starts", o.starts, file, "calibrate.optimizer"));
    o.start_span =
        get_num_or(jo, "start_span", o.start_span, file, "calibrate.optimizer");
    if (jo.contains("start_values")) {
      const json& sv = jo.at("start_values");
      const std::string where = "calibrate.optimizer.start_values";
      if (!sv.is_array() || sv.empty())
        throw ParseError(file, where, "must be a non-empty array");
      if (sv[0].is_number()) {
        // Flat list: one scalar restart per entry (single-parameter setups).
        if (setup.params.size() != 1)
          throw ParseError(file, where,
                           "flat start lists need exactly one parameter; use "
                           "an array of arrays instead");
        for (double v : parse_number_array(sv, file, where))
          o.start_values.push_back({v});
      } else {
        for (const json& entry : sv) {
          std::vector<double> vals = parse_number_array(entry, file, where);
          if (vals.size() != setup.params.size())
            throw ParseError(file, where,
                             "each start needs one value per parameter");
          o.start_values.push_back(std::move(vals));
        }
      }
      for (const std::vector<double>& vals : o.start_values)
        for (double v : vals)
          if (v < 0.0)
            throw ParseError(file, where, "entries must be non-negative");
    }
    try {
      o.validate();
    } catch (const Error& e) {
      throw ParseError(file, "calibrate.optimizer", e.what());
    }
  }
  if (jc.contains("cmaes")) {
    const json& jm = jc.at("cmaes");
    check_keys(jm, {"max_evals", "lambda", "sigma0", "seed", "ftol"}, file,
               "calibrate.cmaes", strict, warnings);
    CmaesConfig& c = setup.cmaes;
    c.max_evals = static_cast<int>(
        get_num_or(jm, "max_evals", c.max_evals, file, "calibrate.cmaes"));
    c.lambda = static_cast<int>(
        get_num_or(jm, "lambda", c.lambda, file, "calibrate.cmaes"));
    c.sigma0 = get_num_or(jm, "sigma0", c.sigma0, file, "calibrate.cmaes");
    c.seed = static_cast<unsigned>(
        get_num_or(jm, "seed", c.seed, file, "calibrate.cmaes"));
    c.ftol = get_num_or(jm, "ftol", c.ftol, file, "calibrate.cmaes");
    try {
      c.validate();
    } catch (const Error& e) {
      throw ParseError(file, "calibrate.cmaes", e.what());
    }
  }
  if (jc.contains("loss")) {
    const json& jl = jc.at("loss");
    check_keys(jl, {"normalize", "strict", "channels"}, file, "calibrate.loss",
               strict, warnings);
    setup.loss.normalize =
        get_bool_or(jl, "normalize", false, file, "calibrate.loss");
    setup.loss.strict = get_bool_or(jl, "strict", false, file, "calibrate.loss");
    if (jl.contains("channels")) {
      const json& ch = jl.at("channels");
      if (!ch.is_array() || ch.empty())
        throw ParseError(file, "calibrate.loss.channels",
                         "must be a non-empty array of channel names");
      for (const json& e : ch) {
        if (!e.is_string())
          throw ParseError(file, "calibrate.loss.channels",
                           "must be a non-empty array of channel names");
        setup.loss.channels.push_back(e.get<std::string>());
      }
    }
  }
  if (jc.contains("reference")) {
    const std::string rel = get_str(jc, "reference", file, "calibrate");
    setup.reference = (base_dir / rel).string();
  }
  return setup;
}

}  // namespace

ScenarioFile load_scenario(const std::string& path, bool strict,
                           std::vector<std::string>* warnings) {
  const json j = load_json(path);
  const std::filesystem::path base_dir =
      std::filesystem::path(path).parent_path();
  check_keys(j,
             {"name", "kind", "robot", "config", "torques", "q0", "qdot0",
              "object", "container", "soft", "calibrate",
              "record_object_position"},
             path, "scenario", strict, warnings);

  ScenarioFile out;
  Scenario& sc = out.scenario;
  sc.name = j.contains("name") ? get_str(j, "name", path, "scenario")
                               : std::filesystem::path(path).stem().string();

  const std::string kind = get_str(j, "kind", path, "scenario");
  if (kind == "robot_only") sc.kind = ScenarioKind::RobotOnly;
  else if (kind == "fixed_object") sc.kind = ScenarioKind::FixedObject;
  else if (kind == "container") sc.kind = ScenarioKind::Container;
  else if (kind == "squeeze") sc.kind = ScenarioKind::Squeeze;
  else throw ParseError(path, "kind", "unknown scenario kind '" + kind + "'");

  sc.record_object =
      get_bool_or(j, "record_object_position", false, path, "scenario");

  const std::string robot_rel = get_str(j, "robot", path, "scenario");
  sc.robot = load_robot((base_dir / robot_rel).string(), strict, warnings);

  if (j.contains("config")) {
    const json& jc = j.at("config");
    check_keys(jc, {"fps", "substeps", "duration", "gravity", "contact"}, path,
               "config", strict, warnings);
    sc.config.fps = get_num_or(jc, "fps", sc.config.fps, path, "config");
    sc.config.substeps = static_cast<int>(
        get_num_or(jc, "substeps", sc.config.substeps, path, "config"));
    sc.config.duration =
        get_num_or(jc, "duration", sc.config.duration, path, "config");
    sc.config.gravity =
        get_vec3_or(jc, "gravity", sc.config.gravity, path, "config");
    if (jc.contains("contact"))
      sc.config.contact = parse_contact(jc.at("contact"), path, strict, warnings);
    try {
      sc.config.validate();
    } catch (const Error& e) {
      throw ParseError(path, "config", e.what());
    }
  }

  if (j.contains("torques")) {
    const json& jt = j.at("torques");
    if (!jt.is_array()) throw ParseError(path, "torques", "must be an array");
    // Each entry drives one DoF: either a single term object or an array of
    // term objects that are summed (e.g. a pulse phase followed by a
    // vibration phase with disjoint time windows).
    auto parse_term = [&](const json& term, const std::string& where) {
      check_keys(term,
                 {"offset", "amplitude", "frequency", "phase", "t_on", "t_off"},
                 path, where, strict, warnings);
      TorqueTerm t;
      t.offset = get_num_or(term, "offset", 0.0, path, where);
      t.amplitude = get_num_or(term, "amplitude", 0.0, path, where);
      t.frequency = get_num_or(term, "frequency", 0.0, path, where);
      t.phase = get_num_or(term, "phase", 0.0, path, where);
      t.t_on = get_num_or(term, "t_on", t.t_on, path, where);
      if (term.contains("t_off")) t.t_off = get_num(term, "t_off", path, where);
      if (t.t_on < 0.0)
        throw ParseError(path, where, "'t_on' must be non-negative");
      if (t.t_off <= t.t_on)
        throw ParseError(path, where, "'t_off' must exceed 't_on'");
      return t;
    };
    for (const json& entry : jt) {
      const std::string where =
          "torques[" + std::to_string(sc.torques.per_dof.size()) + "]";
      std::vector<TorqueTerm> terms;
      if (entry.is_array()) {
        int k = 0;
        for (const json& term : entry)
          terms.push_back(
              parse_term(term, where + "[" + std::to_string(k++) + "]"));
      } else {
        terms.push_back(parse_term(entry, where));
      }
      sc.torques.per_dof.push_back(std::move(terms));
    }
  }
  if (j.contains("q0")) sc.q0 = parse_number_array(j.at("q0"), path, "q0");
  if (j.contains("qdot0"))
    sc.qdot0 = parse_number_array(j.at("qdot0"), path, "qdot0");

  if (j.contains("object")) {
    const json& jo = j.at("object");
    check_keys(jo, {"name", "mass", "com", "inertia", "attach_to", "origin"},
               path, "object", strict, warnings);
    sc.object = parse_body(jo, path, "object");
    sc.attach_body = get_str(jo, "attach_to", path, "object");
    sc.attach_pose = parse_origin(jo, path, "object", strict, warnings);
  } else if (sc.kind == ScenarioKind::FixedObject ||
             sc.kind == ScenarioKind::Container) {
    throw ParseError(path, "object", "required for this scenario kind");
  }

  if (j.contains("container")) {
    const json& jc = j.at("container");
    check_keys(jc, {"half_extents", "ball"}, path, "container", strict,
               warnings);
    sc.container_half_extents =
        get_vec3(jc, "half_extents", path, "container");
    if (!jc.contains("ball"))
      throw ParseError(path, "container", "missing 'ball'");
    const json& jball = jc.at("ball");
    check_keys(jball, {"name", "mass", "radius", "com", "inertia", "start_xyz"},
               path, "container.ball", strict, warnings);
    sc.ball = parse_body(jball, path, "container.ball");
    if (sc.ball.name.empty()) sc.ball.name = "ball";
    sc.ball_radius = get_num(jball, "radius", path, "container.ball");
    sc.ball_solid_sphere = !jball.contains("inertia");
    sc.ball_start.p = get_vec3_or(jball, "start_xyz", Vec3r(0, 0, 0), path,
                                  "container.ball");
  } else if (sc.kind == ScenarioKind::Container) {
    throw ParseError(path, "container", "required for this scenario kind");
  }

  if (j.contains("soft")) {
    const json& js = j.at("soft");
    check_keys(js,
               {"cells", "spacing", "origin", "k_mu", "k_lambda", "density",
                "pads", "pad_half_extents", "floor", "floor_offset"},
               path, "soft", strict, warnings);
    const Vec3r cells = get_vec3(js, "cells", path, "soft");
    sc.soft_nx = static_cast<int>(cells.x);
    sc.soft_ny = static_cast<int>(cells.y);
    sc.soft_nz = static_cast<int>(cells.z);
    sc.soft_h = get_num(js, "spacing", path, "soft");
    sc.soft_origin = get_vec3_or(js, "origin", Vec3r(0, 0, 0), path, "soft");
    sc.material.k_mu = DScalar(get_num(js, "k_mu", path, "soft"));
    sc.material.k_lambda = DScalar(get_num(js, "k_lambda", path, "soft"));
    sc.material.density =
        get_num_or(js, "density", sc.material.density, path, "soft");
    if (!js.contains("pads") || !js.at("pads").is_array() ||
        js.at("pads").size() != 2 || !js.at("pads")[0].is_string() ||
        !js.at("pads")[1].is_string())
      throw ParseError(path, "soft.pads", "must name exactly two pad bodies");
    sc.pad_body_a = js.at("pads")[0].get<std::string>();
    sc.pad_body_b = js.at("pads")[1].get<std::string>();
    if (js.contains("pad_half_extents")) {
      // Either one [hy, hz] pair shared by both pads, or one pair per pad.
      const json& ph = js.at("pad_half_extents");
      auto parse_pair = [&](const json& p) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() ||
            !p[1].is_number())
          throw ParseError(path, "soft.pad_half_extents",
                           "must be [hy, hz] or [[hy, hz], [hy, hz]]");
        const double hy = p[0].get<double>();
        const double hz = p[1].get<double>();
        if (hy <= 0.0 || hz <= 0.0)
          throw ParseError(path, "soft.pad_half_extents",
                           "half extents must be positive");
        return Vec3r(hy, hz, 0.0);
      };
      if (ph.is_array() && ph.size() == 2 && ph[0].is_array()) {
        sc.pad_half_extents_a = parse_pair(ph[0]);
        sc.pad_half_extents_b = parse_pair(ph[1]);
      } else {
        sc.pad_half_extents_a = sc.pad_half_extents_b = parse_pair(ph);
      }
    }
    sc.soft_floor = get_bool_or(js, "floor", sc.soft_floor, path, "soft");
    sc.floor_offset =
        get_num_or(js, "floor_offset", sc.floor_offset, path, "soft");
    try {
      sc.material.validate();
    } catch (const Error& e) {
      throw ParseError(path, "soft", e.what());
    }
  } else if (sc.kind == ScenarioKind::Squeeze) {
    throw ParseError(path, "soft", "required for this scenario kind");
  }

  if (j.contains("calibrate")) {
    out.calib =
        parse_calibration(j.at("calibrate"), path, base_dir, strict, warnings);
    out.has_calibration = true;
  }

  try {
    sc.prepare();
  } catch (const Error& e) {
    throw ParseError(path, "", e.what());
  }
  return out;
}

RefTrajectory load_trajectory_csv(const std::string& path, double target_fps,
                                  bool strict,
                                  std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "", "cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, "", "empty file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t")
    throw ParseError(path, "header", "expected 't,<channel>,...'");
  RefTrajectory traj;
  traj.channels.assign(header.begin() + 1, header.end());
  for (size_t i = 0; i < traj.channels.size(); ++i) {
    if (traj.channels[i].empty())
      throw ParseError(path, "header", "empty channel name");
    for (size_t k = i + 1; k < traj.channels.size(); ++k)
      if (traj.channels[i] == traj.channels[k])
        throw ParseError(path, "header",
                         "duplicate channel '" + traj.channels[i] + "'");
  }

  std::vector<double> times;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path, "row " + std::to_string(row),
                       "expected " + std::to_string(header.size()) +
                           " cells, found " + std::to_string(cells.size()));
    std::vector<double> values;
    values.reserve(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0' || !std::isfinite(v))
        throw ParseError(path, "row " + std::to_string(row),
                         "cell '" + cells[c] + "' is not a finite number");
      values.push_back(v);
    }
    times.push_back(values[0]);
    traj.frames.emplace_back(values.begin() + 1, values.end());
  }
  if (traj.frames.size() < 2)
    throw ParseError(path, "", "need at least two rows");

  // The sampling rate comes from the time column, which must be uniform.
  std::vector<double> dts;
  for (size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    if (dt <= 0.0)
      throw ParseError(path, "row " + std::to_string(i + 2),
                       "time column must be strictly increasing");
    dts.push_back(dt);
  }
  std::vector<double> sorted = dts;
  std::sort(sorted.begin(), sorted.end());
  const double dt_med = sorted[sorted.size() / 2];
  for (double dt : dts)
    if (std::abs(dt - dt_med) > 1e-6 * dt_med)
      throw ParseError(path, "", "time column is not uniformly sampled");
  const double native_fps = 1.0 / dt_med;
  traj.fps = native_fps;

  if (target_fps > 0.0 &&
      std::abs(native_fps - target_fps) >
          1e-9 * std::max(native_fps, target_fps)) {
    if (strict)
      throw ParseError(path, "",
                       "sampled at " + std::to_string(native_fps) +
                           " Hz but " + std::to_string(target_fps) +
                           " Hz is required (strict mode)");
    // Linear resampling onto the target rate over the same time span.
    const double t0 = times.front(), t1 = times.back();
    const long out_frames =
        static_cast<long>(std::floor((t1 - t0) * target_fps + 1e-9)) + 1;
    std::vector<std::vector<double>> resampled;
    resampled.reserve(out_frames);
    size_t hint = 0;
    for (long k = 0; k < out_frames; ++k) {
      const double t = std::min(t0 + k / target_fps, t1);
      while (hint + 2 < times.size() && times[hint + 1] <= t) ++hint;
      const double span = times[hint + 1] - times[hint];
      const double a = std::clamp((t - times[hint]) / span, 0.0, 1.0);
      std::vector<double> rowv(traj.channels.size());
      for (size_t c = 0; c < rowv.size(); ++c)
        rowv[c] =
            (1.0 - a) * traj.frames[hint][c] + a * traj.frames[hint + 1][c];
      resampled.push_back(std::move(rowv));
    }
    warn(warnings, path + ": resampled " + std::to_string(times.size()) +
                       " frames at " + std::to_string(native_fps) +
                       " Hz to " + std::to_string(out_frames) + " frames at " +
                       std::to_string(target_fps) + " Hz");
    traj.frames = std::move(resampled);
    traj.fps = target_fps;
  }
  return traj;
}

void save_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "t";
  for (const std::string& c : traj.channels) out << "," << c;
  out << "\n";
  for (size_t f = 0; f < traj.frames.size(); ++f) {
    out << format_double(static_cast<double>(f) / traj.fps);
    for (const DScalar& v : traj.frames[f]) out << "," << format_double(v.value());
    out << "\n";
  }
  if (!out) throw Error("failed while writing " + path);
}

}  // namespace propsim
