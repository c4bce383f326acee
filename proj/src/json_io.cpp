#include "dams/json_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "dams/errors.hpp"
#include "dams/table.hpp"

namespace dams {
namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

template <class Error>
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw Error(what + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& item : j) {
    if (!item.is_number()) throw Error(what + ": expected an array of numbers");
    v[i++] = item.get<double>();
  }
  return v;
}

template <class Error>
const nlohmann::json& require_key(const nlohmann::json& j, const char* key,
                                  const std::string& what) {
  if (!j.is_object() || !j.contains(key))
    throw Error(what + ": missing required key \"" + key + "\"");
  return j.at(key);
}

}  // namespace

nlohmann::json to_json(const DiscreteJoint& dist) {
  nlohmann::json points = nlohmann::json::array();
  for (const Atom& a : dist.atoms) {
    points.push_back({{"x", vector_to_json(a.x)}, {"y", a.y}, {"p", a.p}});
  }
  return {{"d", dist.dim}, {"points", points}};
}

DiscreteJoint discrete_joint_from_json(const nlohmann::json& j) {
  using Err = DistributionError;
  const auto& d_json = require_key<Err>(j, "d", "distribution");
  if (!d_json.is_number_integer() || d_json.get<std::int64_t>() <= 0)
    throw Err("distribution: \"d\" must be a positive integer");
  DiscreteJoint dist;
  dist.dim = d_json.get<int>();
  const auto& points = require_key<Err>(j, "points", "distribution");
  if (!points.is_array()) throw Err("distribution: \"points\" must be an array");
  for (const auto& pt : points) {
    Atom a;
    a.x = vector_from_json<Err>(require_key<Err>(pt, "x", "distribution point"),
                                "distribution point \"x\"");
    if (a.x.size() != dist.dim)
      throw Err("distribution point has " + std::to_string(a.x.size()) +
                " coordinates, expected " + std::to_string(dist.dim));
    const auto& y = require_key<Err>(pt, "y", "distribution point");
    const auto& p = require_key<Err>(pt, "p", "distribution point");
    if (!y.is_number() || !p.is_number())
      throw Err("distribution point: \"y\" and \"p\" must be numbers");
    a.y = y.get<double>();
    a.p = p.get<double>();
    dist.atoms.push_back(std::move(a));
  }
  validate(dist);
  return dist;
}

nlohmann::json to_json(const MomentSet& ms) {
  nlohmann::json xtx = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ms.xtx.rows(); ++i)
    xtx.push_back(vector_to_json(ms.xtx.row(i).transpose()));
  nlohmann::json j{{"xtx", xtx}, {"q", vector_to_json(ms.q)}, {"n", ms.n}};
  if (ms.has_labels) j["xty"] = vector_to_json(ms.xty);
  return j;
}

MomentSet moment_set_from_json(const nlohmann::json& j) {
  using Err = UsageError;
  MomentSet ms;
  const auto& xtx = require_key<Err>(j, "xtx", "moment set");
  if (!xtx.is_array() || xtx.empty())
    throw Err("moment set: \"xtx\" must be a non-empty array of rows");
  const auto d = static_cast<Eigen::Index>(xtx.size());
  ms.xtx.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd row = vector_from_json<Err>(xtx.at(i), "moment set \"xtx\" row");
    if (row.size() != d) throw Err("moment set: \"xtx\" must be square");
    ms.xtx.row(i) = row.transpose();
  }
  ms.q = vector_from_json<Err>(require_key<Err>(j, "q", "moment set"),
                               "moment set \"q\"");
  if (ms.q.size() != d)
    throw Err("moment set: \"q\" length must match \"xtx\" dimension");
  const auto& n = require_key<Err>(j, "n", "moment set");
  if (!n.is_number_integer() || n.get<std::int64_t>() < 0)
    throw Err("moment set: \"n\" must be a non-negative integer");
  ms.n = n.get<std::int64_t>();
  if (j.contains("xty")) {
    ms.xty = vector_from_json<Err>(j.at("xty"), "moment set \"xty\"");
    if (ms.xty.size() != d)
      throw Err("moment set: \"xty\" length must match \"xtx\" dimension");
    ms.has_labels = true;
  } else {
    ms.xty = Eigen::VectorXd::Zero(d);
    ms.has_labels = false;
  }
  return ms;
}

nlohmann::json to_json(const LinearModel& model) {
  return {{"beta", vector_to_json(model.beta)},
          {"method", method_name(model.method)},
          {"dropped", model.dropped}};
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  using Err = UsageError;
  LinearModel model;
  model.beta = vector_from_json<Err>(require_key<Err>(j, "beta", "model"),
                                     "model \"beta\"");
  const auto& method = require_key<Err>(j, "method", "model");
  if (!method.is_string()) throw Err("model: \"method\" must be a string");
  model.method = method_from_name(method.get<std::string>());
  if (j.contains("dropped")) {
    const auto& dropped = j.at("dropped");
    if (!dropped.is_array()) throw Err("model: \"dropped\" must be an array");
    for (const auto& item : dropped) {
      if (!item.is_number_integer())
        throw Err("model: \"dropped\" must hold column indices");
      model.dropped.push_back(item.get<int>());
    }
  }
  return model;
}

nlohmann::json to_json(const BoundReport& report) {
  nlohmann::json unreliable = nlohmann::json::array();
  for (bool flag : report.unreliable) unreliable.push_back(flag);
  return {{"r_hat", vector_to_json(report.r_hat)},
          {"half_width", vector_to_json(report.half_width)},
          {"unreliable", unreliable},
          {"delta", report.delta},
          {"n_source", report.n_source},
          {"n_target", report.n_target}};
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_text(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw UsageError(path + ": not valid JSON");
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace dams
