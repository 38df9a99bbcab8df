#include "rcwave/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "rcwave/error.hpp"

namespace rcwave {

int TransferFunction::order() const {
  int n = 0;
  for (const auto& t : terms) n += t.multiplicity;
  return n;
}

double TransferFunction::max_pole_magnitude() const {
  double m = 0.0;
  for (const auto& t : terms) m = std::max(m, std::abs(t.pole));
  return m;
}

double TransferFunction::min_pole_magnitude() const {
  if (terms.empty()) return 0.0;
  double m = std::abs(terms.front().pole);
  for (const auto& t : terms) m = std::min(m, std::abs(t.pole));
  return m;
}

std::complex<double> eval_tf(const TransferFunction& tf, std::complex<double> s) {
  std::complex<double> sum = 0.0;
  for (const auto& t : tf.terms) {
    const std::complex<double> d = s - t.pole;
    if (d == 0.0)
      throw Error(ErrorCode::PoleEvaluation, "H(s) evaluated at pole " + std::to_string(t.pole));
    const std::complex<double> inv = 1.0 / d;
    std::complex<double> pw = inv;
    for (int j = 0; j < t.multiplicity; ++j) {
      sum += t.residues[j] * pw;
      pw *= inv;
    }
  }
  return sum;
}

double dc_gain_of(const std::vector<PoleTerm>& terms) {
  double g = 0.0;
  for (const auto& t : terms) {
    const double inv = -1.0 / t.pole;
    double pw = inv;
    for (int j = 0; j < t.multiplicity; ++j) {
      g += t.residues[j] * pw;
      pw *= inv;
    }
  }
  return g;
}

double dc_weight(const PoleTerm& term) {
  const double inv = 1.0 / std::abs(term.pole);
  double w = 0.0;
  double pw = inv;
  for (int j = 0; j < term.multiplicity; ++j) {
    w += std::abs(term.residues[j]) * pw;
    pw *= inv;
  }
  return w;
}

namespace {
std::vector<int> dominance_order(const TransferFunction& tf) {
  std::vector<double> weight;
  for (const auto& t : tf.terms) weight.push_back(dc_weight(t));
  std::vector<int> idx(tf.terms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (weight[a] != weight[b]) return weight[a] > weight[b];
    return std::abs(tf.terms[a].pole) < std::abs(tf.terms[b].pole);
  });
  return idx;
}
}  // namespace

int dominant_term(const TransferFunction& tf) {
  if (tf.terms.empty()) return -1;
  return dominance_order(tf).front();
}

TransferFunction truncate_dominant(const TransferFunction& tf, int max_terms) {
  if (max_terms < 1) throw Error(ErrorCode::InvalidArgument, "max_terms must be >= 1");
  const auto idx = dominance_order(tf);
  TransferFunction out;
  const auto keep = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(max_terms));
  for (std::size_t k = 0; k < keep; ++k) out.terms.push_back(tf.terms[idx[k]]);
  out.dc_gain = dc_gain_of(out.terms);
  return out;
}

std::string to_json(const TransferFunction& tf, int indent) {
  nlohmann::json j;
  j["dc_gain"] = tf.dc_gain;
  j["terms"] = nlohmann::json::array();
  for (const auto& t : tf.terms)
    j["terms"].push_back({{"pole", t.pole}, {"multiplicity", t.multiplicity}, {"residues", t.residues}});
  return j.dump(indent);
}

TransferFunction transfer_function_from_json(std::string_view text) {
  TransferFunction tf;
  try {
    const auto j = nlohmann::json::parse(text);
    tf.dc_gain = j.at("dc_gain").get<double>();
    for (const auto& jt : j.at("terms")) {
      PoleTerm t;
      t.pole = jt.at("pole").get<double>();
      t.multiplicity = jt.at("multiplicity").get<int>();
      t.residues = jt.at("residues").get<std::vector<double>>();
      if (t.multiplicity < 1 || static_cast<int>(t.residues.size()) != t.multiplicity)
        throw Error(ErrorCode::SchemaMismatch, "residue count must equal multiplicity");
      tf.terms.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("transfer function JSON: ") + e.what());
  }
  return tf;
}

}  // namespace rcwave
