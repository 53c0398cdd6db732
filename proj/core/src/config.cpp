#include "ategb/config.hpp"

#include <fstream>
#include <stdexcept>

namespace ategb {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
}

namespace {

const json& need(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing key '") + key + "'");
  return j.at(key);
}

std::vector<double> uniform_probs(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

LinearPayoff linear_from_json(const json& lin, int S) {
  LinearPayoff pay;
  pay.gamma = need(lin, "gamma").get<std::vector<double>>();
  const json& delta = need(lin, "delta");
  if (delta.is_number()) {
    pay.delta.assign(static_cast<std::size_t>(S), std::vector<double>(static_cast<std::size_t>(S), delta.get<double>()));
    for (int s = 0; s < S; ++s) pay.delta[static_cast<std::size_t>(s)][static_cast<std::size_t>(s)] = 0.0;
  } else {
    pay.delta = delta.get<std::vector<std::vector<double>>>();
  }
  pay.link = parse_link(lin.value("link", std::string("gaussian")));
  return pay;
}

}  // namespace

GameSpec game_from_json(const json& j) {
  const int S = need(j, "s_count").get<int>();
  auto zs = need(j, "z_support").get<std::vector<std::vector<double>>>();
  const json& pay = need(j, "payoff");
  const std::string mode = pay.value("mode", std::string("linear"));
  if (mode == "table") return GameSpec::from_table(S, need(pay, "table").get<GameSpec::Table>(), std::move(zs));
  if (mode == "linear") return GameSpec::from_linear(S, linear_from_json(need(pay, "linear"), S), std::move(zs));
  throw std::invalid_argument("config: payoff.mode must be 'table' or 'linear'");
}

json game_to_json(const GameSpec& g) {
  json j;
  j["s_count"] = g.s_count();
  j["z_support"] = g.z_support();
  if (g.linear()) {
    j["payoff"] = {{"mode", "linear"},
                   {"linear", {{"gamma", g.linear()->gamma}, {"delta", g.linear()->delta}, {"link", link_name(g.linear()->link)}}}};
  } else {
    j["payoff"] = {{"mode", "table"}, {"table", g.table()}};
  }
  return j;
}

SimParams params_from_json(const json& j) {
  SimParams p;
  p.s_count = need(j, "s_count").get<int>();
  const int S = p.s_count;
  const json& pay = need(j, "payoff");
  if (pay.value("mode", std::string("linear")) != "linear")
    throw std::invalid_argument("simulation config requires payoff.mode = linear");
  p.payoff = linear_from_json(need(pay, "linear"), S);
  p.z_support = need(j, "z_support").get<std::vector<std::vector<double>>>();
  p.z_probs = j.contains("z_probs") ? j.at("z_probs").get<std::vector<double>>() : uniform_probs(p.z_support.size());
  p.x_support = j.contains("x_support") ? j.at("x_support").get<std::vector<double>>() : std::vector<double>{0.0};
  p.x_probs = j.contains("x_probs") ? j.at("x_probs").get<std::vector<double>>() : uniform_probs(p.x_support.size());
  if (j.contains("w_support")) {
    p.w_support = j.at("w_support").get<std::vector<double>>();
    p.w_probs = j.contains("w_probs") ? j.at("w_probs").get<std::vector<double>>() : uniform_probs(p.w_support.size());
  }

  const json& oi = need(j, "outcome_index");
  p.beta = oi.value("beta", 0.0);
  const json& mu = need(oi, "mu");
  p.mu.assign(profile_count(S), 0.0);
  if (mu.is_object()) {
    if (mu.size() != profile_count(S)) throw std::invalid_argument("outcome_index.mu needs one entry per profile");
    for (const auto& [key, val] : mu.items()) p.mu[parse_profile(key, S)] = val.get<double>();
  } else {
    p.mu = mu.get<std::vector<double>>();
  }

  const json& el = need(j, "error_law");
  p.correlation = Eigen::MatrixXd::Identity(S + 1, S + 1);
  if (el.contains("correlation")) {
    const auto rows = el.at("correlation").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != S + 1) throw std::invalid_argument("error_law.correlation must be (S+1)x(S+1)");
    for (int a = 0; a <= S; ++a) {
      if (static_cast<int>(rows[static_cast<std::size_t>(a)].size()) != S + 1)
        throw std::invalid_argument("error_law.correlation must be (S+1)x(S+1)");
      for (int b = 0; b <= S; ++b) p.correlation(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
  } else {
    const double rho = need(el, "rho").get<double>();
    p.correlation.setConstant(rho);
    p.correlation.diagonal().setOnes();
  }
  p.selection = SelectionRule::parse(j.value("selection", std::string("uniform")));
  if (j.contains("y_range")) {
    const auto r = j.at("y_range").get<std::vector<double>>();
    if (r.size() != 2) throw std::invalid_argument("y_range must be [lo, hi]");
    p.y_lo = r[0];
    p.y_hi = r[1];
  }
  p.validate();
  return p;
}

json params_to_json(const SimParams& p) {
  json j = game_to_json(p.game());
  j["z_probs"] = p.z_probs;
  j["x_support"] = p.x_support;
  j["x_probs"] = p.x_probs;
  if (p.has_w()) {
    j["w_support"] = p.w_support;
    j["w_probs"] = p.w_probs;
  }
  json mu = json::object();
  for (Profile d = 0; d < profile_count(p.s_count); ++d) mu[profile_string(d, p.s_count)] = p.mu[d];
  j["outcome_index"] = {{"mu", mu}, {"beta", p.beta}};
  std::vector<std::vector<double>> corr(static_cast<std::size_t>(p.s_count + 1));
  for (int a = 0; a <= p.s_count; ++a)
    for (int b = 0; b <= p.s_count; ++b) corr[static_cast<std::size_t>(a)].push_back(p.correlation(a, b));
  j["error_law"] = {{"correlation", corr}};
  j["selection"] = p.selection.name();
  j["y_range"] = {p.y_lo, p.y_hi};
  return j;
}

}  // namespace ategb
