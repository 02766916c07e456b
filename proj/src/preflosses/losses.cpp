#include "faktlab/preflosses/losses.hpp"

#include <cmath>

#include "faktlab/error.hpp"

namespace faktlab::preflosses {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Dpo: return "dpo";
    case LossKind::Ipo: return "ipo";
    case LossKind::Kto: return "kto";
    case LossKind::Cpo: return "cpo";
    case LossKind::Rso: return "rso";
  }
  return "?";
}

LossKind parse_loss(const std::string& name) {
  for (LossKind k : kAllLosses)
    if (to_string(k) == name) return k;
  if (name == "kto_pair") return LossKind::Kto;
  fail(ErrorKind::Config, "unknown loss kind '" + name + "'");
}

void LossConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::Config, std::string("loss hyperparameter ") + name + " must be positive");
  };
  positive(beta, "beta");
  positive(tau, "tau");
  positive(gamma, "gamma");
  positive(lambda_d, "lambda_d");
  positive(lambda_u, "lambda_u");
}

namespace {

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// -log sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double margin(const PairLogprobs& p) {
  return (p.lw_pol - p.lw_ref) - (p.ll_pol - p.ll_ref);
}

}  // namespace

LossOutput dpo_loss(const PairLogprobs& p, const LossConfig& c) {
  const double z = c.beta * margin(p);
  const double d = -c.beta * sigmoid(-z);
  return {neg_log_sigmoid(z), d, -d};
}

LossOutput ipo_loss(const PairLogprobs& p, const LossConfig& c) {
  const double h = margin(p);
  const double r = h - 1.0 / (2.0 * c.tau);
  return {r * r, 2.0 * r, -2.0 * r};
}

LossOutput cpo_loss(const PairLogprobs& p, const LossConfig& c) {
  const double z = c.beta * (p.lw_pol - p.ll_pol);
  const double d = -c.beta * sigmoid(-z);
  return {neg_log_sigmoid(z) - p.lw_pol, d - 1.0, -d};
}

LossOutput rso_loss(const PairLogprobs& p, const LossConfig& c) {
  const double v = 1.0 - c.gamma * margin(p);
  if (v <= 0.0) return {0.0, 0.0, 0.0};
  return {v, -c.gamma, c.gamma};
}

namespace {

struct KtoStats {
  double chosen_kl = 0.0, rejected_kl = 0.0;
  bool chosen_active = false, rejected_active = false;
};

KtoStats kto_stats(std::span<const PairLogprobs> batch) {
  if (batch.empty()) fail(ErrorKind::InvalidArgument, "KTO needs a non-empty batch");
  double cs = 0.0, rs = 0.0;
  for (const auto& q : batch) {
    cs += q.lw_pol - q.lw_ref;
    rs += q.ll_pol - q.ll_ref;
  }
  const double n = static_cast<double>(batch.size());
  KtoStats s;
  s.chosen_active = cs / n > 0.0;
  s.rejected_active = rs / n > 0.0;
  s.chosen_kl = s.chosen_active ? cs / n : 0.0;
  s.rejected_kl = s.rejected_active ? rs / n : 0.0;
  return s;
}

// Value of one pair and the partials of that value with respect to its own
// chosen/rejected log ratios and to the two KL estimates.
struct KtoTerm {
  double value, d_cr, d_rr, d_ckl, d_rkl;
};

KtoTerm kto_term(const PairLogprobs& p, const LossConfig& c, const KtoStats& s) {
  const double cr = p.lw_pol - p.lw_ref;
  const double rr = p.ll_pol - p.ll_ref;
  const double sd = sigmoid(c.beta * (cr - s.rejected_kl));
  const double su = sigmoid(c.beta * (s.chosen_kl - rr));
  const double gd = c.lambda_d * c.beta * sd * (1.0 - sd) / 2.0;
  const double gu = c.lambda_u * c.beta * su * (1.0 - su) / 2.0;
  return {(c.lambda_d * (1.0 - sd) + c.lambda_u * (1.0 - su)) / 2.0, -gd, gu, -gu, gd};
}

}  // namespace

LossOutput kto_pair_loss(const PairLogprobs& p, const LossConfig& c,
                         std::span<const PairLogprobs> batch, std::size_t index) {
  if (index >= batch.size()) fail(ErrorKind::InvalidArgument, "pair index outside batch");
  const auto s = kto_stats(batch);
  const auto t = kto_term(p, c, s);
  const double n = static_cast<double>(batch.size());
  LossOutput out{t.value, t.d_cr, t.d_rr};
  if (s.chosen_active) out.d_lw_pol += t.d_ckl / n;
  if (s.rejected_active) out.d_ll_pol += t.d_rkl / n;
  return out;
}

LossOutput kto_pair_loss(const PairLogprobs& p, const LossConfig& c,
                         std::span<const PairLogprobs> batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& q = batch[i];
    if (q.lw_pol == p.lw_pol && q.ll_pol == p.ll_pol && q.lw_ref == p.lw_ref &&
        q.ll_ref == p.ll_ref)
      return kto_pair_loss(p, c, batch, i);
  }
  fail(ErrorKind::InvalidArgument, "KTO batch does not contain the pair");
}

LossOutput pair_loss(const PairLogprobs& p, const LossConfig& c) {
  switch (c.kind) {
    case LossKind::Dpo: return dpo_loss(p, c);
    case LossKind::Ipo: return ipo_loss(p, c);
    case LossKind::Cpo: return cpo_loss(p, c);
    case LossKind::Rso: return rso_loss(p, c);
    case LossKind::Kto: return kto_pair_loss(p, c, std::span(&p, 1), 0);
  }
  fail(ErrorKind::InvalidArgument, "unknown loss kind");
}

BatchLoss batch_loss(std::span<const PairLogprobs> batch, const LossConfig& c) {
  if (batch.empty()) fail(ErrorKind::InvalidArgument, "empty batch");
  const std::size_t n = batch.size();
  const double inv = 1.0 / static_cast<double>(n);
  BatchLoss out;
  out.d_lw_pol.assign(n, 0.0);
  out.d_ll_pol.assign(n, 0.0);
  if (c.kind != LossKind::Kto) {
    for (std::size_t i = 0; i < n; ++i) {
      auto o = pair_loss(batch[i], c);
      out.value += o.value * inv;
      out.d_lw_pol[i] = o.d_lw_pol * inv;
      out.d_ll_pol[i] = o.d_ll_pol * inv;
    }
    return out;
  }
  const auto s = kto_stats(batch);
  double sum_ckl = 0.0, sum_rkl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto t = kto_term(batch[i], c, s);
    out.value += t.value * inv;
    out.d_lw_pol[i] = t.d_cr * inv;
    out.d_ll_pol[i] = t.d_rr * inv;
    sum_ckl += t.d_ckl * inv;
    sum_rkl += t.d_rkl * inv;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (s.chosen_active) out.d_lw_pol[i] += sum_ckl * inv;
    if (s.rejected_active) out.d_ll_pol[i] += sum_rkl * inv;
  }
  return out;
}

}  // namespace faktlab::preflosses
