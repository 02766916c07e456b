#include "transformer.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace faktlab::tinylm::detail {

namespace {

using Eigen::Index;
using CMat = Eigen::Map<const Mat>;
using MMat = Eigen::Map<Mat>;
using CRow = Eigen::Map<const RowVec>;
using MRow = Eigen::Map<RowVec>;

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)

CMat cmat(std::span<const double> p, std::size_t off, std::size_t rows, std::size_t cols) {
  return CMat(p.data() + off, static_cast<Index>(rows), static_cast<Index>(cols));
}
MMat mmat(std::span<double> p, std::size_t off, std::size_t rows, std::size_t cols) {
  return MMat(p.data() + off, static_cast<Index>(rows), static_cast<Index>(cols));
}
CRow crow(std::span<const double> p, std::size_t off, std::size_t n) {
  return CRow(p.data() + off, static_cast<Index>(n));
}
MRow mrow(std::span<double> p, std::size_t off, std::size_t n) {
  return MRow(p.data() + off, static_cast<Index>(n));
}

double gelu(double x) {
  const double u = kGeluC * (x + 0.044715 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  const double x2 = x * x;
  const double t = std::tanh(kGeluC * (x + 0.044715 * x2 * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x2);
}

void ln_forward(const Mat& x, const CRow& g, const CRow& b, Mat& xhat, ColVec& rstd, Mat& y) {
  const Index rows = x.rows(), d = x.cols();
  xhat.resize(rows, d);
  y.resize(rows, d);
  rstd.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    const double mu = x.row(i).mean();
    RowVec c = x.row(i).array() - mu;
    const double r = 1.0 / std::sqrt(c.squaredNorm() / static_cast<double>(d) + kLnEps);
    rstd(i) = r;
    xhat.row(i) = c * r;
    y.row(i) = xhat.row(i).cwiseProduct(g) + b;
  }
}

void ln_backward(const Mat& dy, const Mat& xhat, const ColVec& rstd, const CRow& g, MRow dg,
                 MRow db, Mat& dx) {
  const Index rows = dy.rows(), d = dy.cols();
  dx.resize(rows, d);
  for (Index i = 0; i < rows; ++i) {
    RowVec dxhat = dy.row(i).cwiseProduct(g);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.dot(xhat.row(i)) / static_cast<double>(d);
    dx.row(i) = rstd(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2);
  }
  dg += dy.cwiseProduct(xhat).colwise().sum();
  db += dy.colwise().sum();
}

void ln_row(const RowVec& x, const CRow& g, const CRow& b, RowVec& y) {
  const double mu = x.mean();
  RowVec c = x.array() - mu;
  const double r = 1.0 / std::sqrt(c.squaredNorm() / static_cast<double>(x.size()) + kLnEps);
  y = (c * r).cwiseProduct(g) + b;
}

}  // namespace

ParamLayout::ParamLayout(const ModelConfig& config)
    : vocab(config.vocab_size),
      dim(config.embed_dim),
      heads(config.num_heads),
      context(config.context_len),
      hidden(config.hidden_dim()) {
  std::size_t off = 0;
  auto take = [&off](std::size_t n) {
    std::size_t at = off;
    off += n;
    return at;
  };
  tok_emb = take(vocab * dim);
  pos_emb = take(context * dim);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerOffsets lo{};
    lo.ln1_g = take(dim);
    lo.ln1_b = take(dim);
    lo.w_qkv = take(dim * 3 * dim);
    lo.b_qkv = take(3 * dim);
    lo.w_o = take(dim * dim);
    lo.b_o = take(dim);
    lo.ln2_g = take(dim);
    lo.ln2_b = take(dim);
    lo.w_fc = take(dim * hidden);
    lo.b_fc = take(hidden);
    lo.w_proj = take(hidden * dim);
    lo.b_proj = take(dim);
    layers.push_back(lo);
  }
  lnf_g = take(dim);
  lnf_b = take(dim);
  w_out = take(dim * vocab);
  b_out = take(vocab);
  total = off;
}

void forward(const ParamLayout& L, std::span<const double> p, ForwardCache& c,
             std::size_t first_logit_row) {
  const auto T = static_cast<Index>(c.input.size());
  const auto D = static_cast<Index>(L.dim);
  const auto H = static_cast<Index>(L.heads);
  const Index dh = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat x(T, D);
  auto tok = cmat(p, L.tok_emb, L.vocab, L.dim);
  auto pos = cmat(p, L.pos_emb, L.context, L.dim);
  for (Index i = 0; i < T; ++i) x.row(i) = tok.row(c.input[static_cast<std::size_t>(i)]) + pos.row(i);

  c.layers.resize(L.layers.size());
  for (std::size_t l = 0; l < L.layers.size(); ++l) {
    const auto& lo = L.layers[l];
    auto& lc = c.layers[l];
    ln_forward(x, crow(p, lo.ln1_g, L.dim), crow(p, lo.ln1_b, L.dim), lc.xhat1, lc.rstd1, lc.a);
    lc.qkv.noalias() = lc.a * cmat(p, lo.w_qkv, L.dim, 3 * L.dim);
    lc.qkv.rowwise() += crow(p, lo.b_qkv, 3 * L.dim);

    lc.attn.resize(T, D);
    lc.probs.resize(static_cast<std::size_t>(H));
    for (Index h = 0; h < H; ++h) {
      auto q = lc.qkv.middleCols(h * dh, dh);
      auto k = lc.qkv.middleCols(D + h * dh, dh);
      auto v = lc.qkv.middleCols(2 * D + h * dh, dh);
      Mat& P = lc.probs[static_cast<std::size_t>(h)];
      P.noalias() = (q * k.transpose()) * scale;
      for (Index i = 0; i < T; ++i) {
        auto row = P.row(i);
        const double mx = row.head(i + 1).maxCoeff();
        double sum = 0.0;
        for (Index j = 0; j <= i; ++j) {
          row(j) = std::exp(row(j) - mx);
          sum += row(j);
        }
        row.head(i + 1) /= sum;
        row.tail(T - i - 1).setZero();
      }
      lc.attn.middleCols(h * dh, dh).noalias() = P * v;
    }
    x.noalias() += lc.attn * cmat(p, lo.w_o, L.dim, L.dim);
    x.rowwise() += crow(p, lo.b_o, L.dim);

    ln_forward(x, crow(p, lo.ln2_g, L.dim), crow(p, lo.ln2_b, L.dim), lc.xhat2, lc.rstd2, lc.b);
    lc.hpre.noalias() = lc.b * cmat(p, lo.w_fc, L.dim, L.hidden);
    lc.hpre.rowwise() += crow(p, lo.b_fc, L.hidden);
    lc.hact = lc.hpre.unaryExpr(&gelu);
    x.noalias() += lc.hact * cmat(p, lo.w_proj, L.hidden, L.dim);
    x.rowwise() += crow(p, lo.b_proj, L.dim);
  }
  ln_forward(x, crow(p, L.lnf_g, L.dim), crow(p, L.lnf_b, L.dim), c.xhatf, c.rstdf, c.f);

  c.first = first_logit_row;
  const Index rows = T - static_cast<Index>(first_logit_row);
  if (rows <= 0) {
    c.probs_out.resize(0, static_cast<Index>(L.vocab));
    return;
  }
  c.probs_out.noalias() = c.f.bottomRows(rows) * cmat(p, L.w_out, L.dim, L.vocab);
  c.probs_out.rowwise() += crow(p, L.b_out, L.vocab);
  for (Index i = 0; i < rows; ++i) {
    auto row = c.probs_out.row(i);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    row /= row.sum();
  }
}

RowVec last_logits(const ParamLayout& L, std::span<const double> p, const ForwardCache& c) {
  RowVec z = c.f.row(c.f.rows() - 1) * cmat(p, L.w_out, L.dim, L.vocab);
  z += crow(p, L.b_out, L.vocab);
  return z;
}

namespace {

void backward_impl(const ParamLayout& L, std::span<const double> p, const ForwardCache& c,
                   double scale, std::span<double> g) {
  const auto T = static_cast<Index>(c.input.size());
  const auto D = static_cast<Index>(L.dim);
  const auto H = static_cast<Index>(L.heads);
  const Index dh = D / H;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto R = static_cast<Index>(c.targets.size());
  if (R == 0 || scale == 0.0) return;

  // d(sum log softmax[target]) / d logits = onehot - probs.
  Mat dz = -scale * c.probs_out;
  for (Index i = 0; i < R; ++i) dz(i, c.targets[static_cast<std::size_t>(i)]) += scale;

  auto fr = c.f.bottomRows(R);
  mmat(g, L.w_out, L.dim, L.vocab).noalias() += fr.transpose() * dz;
  mrow(g, L.b_out, L.vocab) += dz.colwise().sum();
  Mat df = Mat::Zero(T, D);
  df.bottomRows(R).noalias() = dz * cmat(p, L.w_out, L.dim, L.vocab).transpose();

  Mat dx;
  ln_backward(df, c.xhatf, c.rstdf, crow(p, L.lnf_g, L.dim), mrow(g, L.lnf_g, L.dim),
              mrow(g, L.lnf_b, L.dim), dx);

  Mat tmp, dsub;
  for (std::size_t li = L.layers.size(); li-- > 0;) {
    const auto& lo = L.layers[li];
    const auto& lc = c.layers[li];

    // MLP branch: x_out = x_mid + gelu(LN2(x_mid) Wfc + bfc) Wproj + bproj
    mmat(g, lo.w_proj, L.hidden, L.dim).noalias() += lc.hact.transpose() * dx;
    mrow(g, lo.b_proj, L.dim) += dx.colwise().sum();
    Mat dh_act = dx * cmat(p, lo.w_proj, L.hidden, L.dim).transpose();
    dh_act.array() *= lc.hpre.unaryExpr(&gelu_grad).array();
    mmat(g, lo.w_fc, L.dim, L.hidden).noalias() += lc.b.transpose() * dh_act;
    mrow(g, lo.b_fc, L.hidden) += dh_act.colwise().sum();
    tmp.noalias() = dh_act * cmat(p, lo.w_fc, L.dim, L.hidden).transpose();
    ln_backward(tmp, lc.xhat2, lc.rstd2, crow(p, lo.ln2_g, L.dim), mrow(g, lo.ln2_g, L.dim),
                mrow(g, lo.ln2_b, L.dim), dsub);
    dx += dsub;

    // Attention branch: x_mid = x_in + attn Wo + bo
    mmat(g, lo.w_o, L.dim, L.dim).noalias() += lc.attn.transpose() * dx;
    mrow(g, lo.b_o, L.dim) += dx.colwise().sum();
    Mat dattn = dx * cmat(p, lo.w_o, L.dim, L.dim).transpose();
    Mat dqkv(T, 3 * D);
    for (Index h = 0; h < H; ++h) {
      const Mat& P = lc.probs[static_cast<std::size_t>(h)];
      auto q = lc.qkv.middleCols(h * dh, dh);
      auto k = lc.qkv.middleCols(D + h * dh, dh);
      auto v = lc.qkv.middleCols(2 * D + h * dh, dh);
      auto dout = dattn.middleCols(h * dh, dh);
      Mat dP = dout * v.transpose();
      dqkv.middleCols(2 * D + h * dh, dh).noalias() = P.transpose() * dout;
      ColVec rs = (dP.cwiseProduct(P)).rowwise().sum();
      Mat dS = P.cwiseProduct(dP.colwise() - rs);
      dqkv.middleCols(h * dh, dh).noalias() = (dS * k) * att_scale;
      dqkv.middleCols(D + h * dh, dh).noalias() = (dS.transpose() * q) * att_scale;
    }
    mmat(g, lo.w_qkv, L.dim, 3 * L.dim).noalias() += lc.a.transpose() * dqkv;
    mrow(g, lo.b_qkv, 3 * L.dim) += dqkv.colwise().sum();
    tmp.noalias() = dqkv * cmat(p, lo.w_qkv, L.dim, 3 * L.dim).transpose();
    ln_backward(tmp, lc.xhat1, lc.rstd1, crow(p, lo.ln1_g, L.dim), mrow(g, lo.ln1_g, L.dim),
                mrow(g, lo.ln1_b, L.dim), dsub);
    dx += dsub;
  }

  auto dtok = mmat(g, L.tok_emb, L.vocab, L.dim);
  auto dpos = mmat(g, L.pos_emb, L.context, L.dim);
  for (Index i = 0; i < T; ++i) {
    dtok.row(c.input[static_cast<std::size_t>(i)]) += dx.row(i);
    dpos.row(i) += dx.row(i);
  }
}

}  // namespace

void backward(const ParamLayout& L, std::span<const double> p, const ForwardCache& c,
              double scale, std::span<double> g) {
  if (reinterpret_cast<std::uintptr_t>(g.data()) % 64 == 0) {
    backward_impl(L, p, c, scale, g);
    return;
  }
  thread_local ParamVector scratch;
  scratch.assign(g.size(), 0.0);
  backward_impl(L, p, c, scale, scratch);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += scratch[i];
}

KvDecoder::KvDecoder(const ParamLayout& layout, std::span<const double> params)
    : layout_(layout), params_(params) {
  const auto C = static_cast<Index>(layout.context);
  const auto D = static_cast<Index>(layout.dim);
  keys_.assign(layout.layers.size(), Mat(C, D));
  values_.assign(layout.layers.size(), Mat(C, D));
}

void KvDecoder::step(TokenId token) {
  const auto& L = layout_;
  auto p = params_;
  const auto D = static_cast<Index>(L.dim);
  const auto H = static_cast<Index>(L.heads);
  const Index dh = D / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto t = static_cast<Index>(pos_);

  RowVec x = cmat(p, L.tok_emb, L.vocab, L.dim).row(token) +
             cmat(p, L.pos_emb, L.context, L.dim).row(t);
  RowVec a, qkv, o(D), b, hid;
  for (std::size_t l = 0; l < L.layers.size(); ++l) {
    const auto& lo = L.layers[l];
    ln_row(x, crow(p, lo.ln1_g, L.dim), crow(p, lo.ln1_b, L.dim), a);
    qkv.noalias() = a * cmat(p, lo.w_qkv, L.dim, 3 * L.dim);
    qkv += crow(p, lo.b_qkv, 3 * L.dim);
    keys_[l].row(t) = qkv.segment(D, D);
    values_[l].row(t) = qkv.segment(2 * D, D);
    for (Index h = 0; h < H; ++h) {
      auto kb = keys_[l].block(0, h * dh, t + 1, dh);
      auto vb = values_[l].block(0, h * dh, t + 1, dh);
      ColVec s = (kb * qkv.segment(h * dh, dh).transpose()) * scale;
      s = (s.array() - s.maxCoeff()).exp();
      s /= s.sum();
      o.segment(h * dh, dh).noalias() = s.transpose() * vb;
    }
    x.noalias() += o * cmat(p, lo.w_o, L.dim, L.dim);
    x += crow(p, lo.b_o, L.dim);
    ln_row(x, crow(p, lo.ln2_g, L.dim), crow(p, lo.ln2_b, L.dim), b);
    hid.noalias() = b * cmat(p, lo.w_fc, L.dim, L.hidden);
    hid += crow(p, lo.b_fc, L.hidden);
    hid = hid.unaryExpr(&gelu);
    x.noalias() += hid * cmat(p, lo.w_proj, L.hidden, L.dim);
    x += crow(p, lo.b_proj, L.dim);
  }
  RowVec f;
  ln_row(x, crow(p, L.lnf_g, L.dim), crow(p, L.lnf_b, L.dim), f);
  RowVec z = f * cmat(p, L.w_out, L.dim, L.vocab);
  z += crow(p, L.b_out, L.vocab);
  logits_.assign(z.data(), z.data() + z.size());
  ++pos_;
}

}  // namespace faktlab::tinylm::detail
