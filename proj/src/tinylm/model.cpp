#include "faktlab/tinylm/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "faktlab/error.hpp"
#include "faktlab/io.hpp"
#include "faktlab/rng.hpp"
#include "transformer.hpp"

namespace faktlab::tinylm {

SequenceTrace::SequenceTrace() = default;
SequenceTrace::SequenceTrace(SequenceTrace&&) noexcept = default;
SequenceTrace& SequenceTrace::operator=(SequenceTrace&&) noexcept = default;
SequenceTrace::~SequenceTrace() = default;

void ModelConfig::validate() const {
  if (vocab_size < 6) fail(ErrorKind::InvalidArgument, "vocab_size too small");
  if (embed_dim == 0 || num_layers == 0 || num_heads == 0 || context_len < 2)
    fail(ErrorKind::InvalidArgument, "model dimensions must be positive");
  if (embed_dim % num_heads != 0)
    fail(ErrorKind::InvalidArgument, "embed_dim " + std::to_string(embed_dim) +
                                         " is not divisible by num_heads " +
                                         std::to_string(num_heads));
}

std::size_t param_count(const ModelConfig& config) { return detail::ParamLayout(config).total; }

PolicyModel::PolicyModel(ModelConfig config, Vocab vocab, std::vector<double> params,
                         bool frozen)
    : config_(config), vocab_(std::move(vocab)), params_(params.begin(), params.end()),
      frozen_(frozen) {
  config_.validate();
  config_.mlp_dim = config_.hidden_dim();
  if (vocab_.size() != config_.vocab_size)
    fail(ErrorKind::InvalidArgument, "vocabulary size does not match config");
  if (params_.size() != param_count(config_))
    fail(ErrorKind::InvalidArgument, "parameter vector has the wrong length");
  for (double v : params_)
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite parameter");
}

std::span<double> PolicyModel::mutable_params() {
  if (frozen_) fail(ErrorKind::State, "frozen model parameters are immutable");
  return params_;
}

namespace {

void check_tokens(const Vocab& vocab, std::span<const TokenId> tokens) {
  for (TokenId t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= vocab.size())
      fail(ErrorKind::InvalidArgument, "token id out of range");
}

detail::ForwardCache make_cache(const PolicyModel& m, std::span<const TokenId> prompt,
                                std::span<const TokenId> response) {
  check_tokens(m.vocab(), prompt);
  check_tokens(m.vocab(), response);
  detail::ForwardCache c;
  c.input.reserve(1 + prompt.size() + response.size());
  c.input.push_back(Vocab::kBosId);
  c.input.insert(c.input.end(), prompt.begin(), prompt.end());
  if (!response.empty()) c.input.insert(c.input.end(), response.begin(), response.end() - 1);
  if (c.input.size() > m.config().context_len)
    fail(ErrorKind::InvalidArgument, "sequence of " + std::to_string(c.input.size()) +
                                         " positions exceeds context window of " +
                                         std::to_string(m.config().context_len));
  c.targets.assign(response.begin(), response.end());
  return c;
}

SequenceScore score_from(const detail::ForwardCache& c) {
  SequenceScore s;
  s.per_token_logprobs.reserve(c.targets.size());
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    double lp = std::log(c.probs_out(static_cast<Eigen::Index>(i), c.targets[i]));
    s.per_token_logprobs.push_back(lp);
    s.total_logprob += lp;
  }
  return s;
}

class CachedSession final : public DecodeSession {
 public:
  CachedSession(const PolicyModel& model, std::span<const TokenId> prompt)
      : layout_(model.config()), decoder_(layout_, model.params()) {
    if (prompt.size() + 1 > model.config().context_len)
      fail(ErrorKind::InvalidArgument, "prompt exceeds context window");
    check_tokens(model.vocab(), prompt);
    decoder_.step(Vocab::kBosId);
    for (TokenId t : prompt) decoder_.step(t);
  }

  std::span<const double> logits() const override { return decoder_.logits(); }
  void push(TokenId token) override {
    if (decoder_.length() >= layout_.context)
      fail(ErrorKind::InvalidArgument, "context window is full");
    decoder_.step(token);
  }
  std::size_t length() const override { return decoder_.length(); }

 private:
  detail::ParamLayout layout_;
  detail::KvDecoder decoder_;
};

}  // namespace

std::vector<double> PolicyModel::next_token_logits(std::span<const TokenId> context) const {
  detail::ParamLayout layout(config_);
  auto c = make_cache(*this, context, {});
  detail::forward(layout, params_, c, c.input.size());
  auto z = detail::last_logits(layout, params_, c);
  return {z.data(), z.data() + z.size()};
}

std::vector<double> PolicyModel::next_token_dist(std::span<const TokenId> context) const {
  return softmax(next_token_logits(context));
}

SequenceScore PolicyModel::sequence_logprob(std::span<const TokenId> prompt,
                                            std::span<const TokenId> response) const {
  return trace(prompt, response).score();
}

SequenceTrace PolicyModel::trace(std::span<const TokenId> prompt,
                                 std::span<const TokenId> response) const {
  SequenceTrace t;
  t.cache_ = std::make_unique<detail::ForwardCache>(make_cache(*this, prompt, response));
  if (!response.empty()) {
    detail::ParamLayout layout(config_);
    detail::forward(layout, params_, *t.cache_, prompt.size());
    t.score_ = score_from(*t.cache_);
  }
  return t;
}

void PolicyModel::backprop(const SequenceTrace& trace, double scale,
                           std::span<double> grad) const {
  if (frozen_) fail(ErrorKind::State, "cannot differentiate a frozen model");
  if (grad.size() != params_.size()) fail(ErrorKind::InvalidArgument, "gradient size mismatch");
  if (!trace.cache_ || trace.cache_->targets.empty()) return;
  detail::ParamLayout layout(config_);
  detail::backward(layout, params_, *trace.cache_, scale, grad);
}

std::vector<double> PolicyModel::grad_sequence_logprob(std::span<const TokenId> prompt,
                                                       std::span<const TokenId> response) const {
  if (frozen_) fail(ErrorKind::State, "cannot differentiate a frozen model");
  std::vector<double> grad(params_.size(), 0.0);
  backprop(trace(prompt, response), 1.0, grad);
  return grad;
}

std::unique_ptr<DecodeSession> PolicyModel::start(std::span<const TokenId> prompt) const {
  return std::make_unique<CachedSession>(*this, prompt);
}

PolicyModel PolicyModel::snapshot_frozen() const {
  return PolicyModel(config_, vocab_, {params_.begin(), params_.end()}, true);
}

PolicyModel snapshot_frozen(const PolicyModel& model) { return model.snapshot_frozen(); }

PolicyModel init_model(const ModelConfig& config, const Vocab& vocab) {
  config.validate();
  detail::ParamLayout layout(config);
  std::vector<double> p(layout.total, 0.0);
  Rng rng = Rng(config.seed).split("init");
  constexpr double kStd = 0.02;
  const double resid_std = kStd / std::sqrt(2.0 * static_cast<double>(config.num_layers));
  auto fill = [&](std::size_t off, std::size_t n, double std) {
    for (std::size_t i = 0; i < n; ++i) p[off + i] = std * rng.normal();
  };
  auto ones = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[off + i] = 1.0;
  };
  const std::size_t D = layout.dim, F = layout.hidden;
  fill(layout.tok_emb, layout.vocab * D, kStd);
  fill(layout.pos_emb, layout.context * D, kStd);
  for (const auto& lo : layout.layers) {
    ones(lo.ln1_g, D);
    fill(lo.w_qkv, D * 3 * D, kStd);
    fill(lo.w_o, D * D, resid_std);
    ones(lo.ln2_g, D);
    fill(lo.w_fc, D * F, kStd);
    fill(lo.w_proj, F * D, resid_std);
  }
  ones(layout.lnf_g, D);
  fill(layout.w_out, D * layout.vocab, kStd);
  return PolicyModel(config, vocab, std::move(p), false);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[6] = {'F', 'A', 'K', 'T', 'L', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::Io, "truncated checkpoint");
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t u(int width) {
    auto s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const PolicyModel& model) {
  const auto& c = model.config();
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  for (std::uint64_t v : {std::uint64_t{c.vocab_size}, std::uint64_t{c.embed_dim},
                          std::uint64_t{c.num_layers}, std::uint64_t{c.num_heads},
                          std::uint64_t{c.context_len}, std::uint64_t{c.hidden_dim()}, c.seed})
    put_u64(out, v);
  out.push_back(model.frozen() ? '\1' : '\0');
  put_u64(out, model.params().size());
  for (double v : model.params()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  const auto& tokens = model.vocab().tokens();
  put_u64(out, tokens.size());
  for (const auto& t : tokens) {
    put_u32(out, static_cast<std::uint32_t>(t.size()));
    out += t;
  }
  return out;
}

PolicyModel deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    fail(ErrorKind::Io, "not a FAKTLM checkpoint");
  if (auto v = r.u(4); v != kCheckpointVersion)
    fail(ErrorKind::Io, "unsupported checkpoint version " + std::to_string(v));
  ModelConfig c;
  c.vocab_size = r.u(8);
  c.embed_dim = r.u(8);
  c.num_layers = r.u(8);
  c.num_heads = r.u(8);
  c.context_len = r.u(8);
  c.mlp_dim = r.u(8);
  c.seed = r.u(8);
  const bool frozen = r.u(1) != 0;
  const auto n = r.u(8);
  if (n > bytes.size() / 8) fail(ErrorKind::Io, "corrupt parameter count");
  std::vector<double> params(n);
  for (auto& v : params) v = std::bit_cast<double>(r.u(8));
  const auto ntok = r.u(8);
  if (ntok > bytes.size()) fail(ErrorKind::Io, "corrupt vocabulary size");
  std::vector<std::string> tokens;
  tokens.reserve(ntok);
  for (std::uint64_t i = 0; i < ntok; ++i) {
    auto len = r.u(4);
    tokens.emplace_back(r.take(len));
  }
  if (!r.done()) fail(ErrorKind::Io, "trailing bytes in checkpoint");
  return PolicyModel(c, Vocab(std::move(tokens)), std::move(params), frozen);
}

void save_checkpoint(const PolicyModel& model, const std::string& path) {
  io::write_file(path, serialize_checkpoint(model));
}

PolicyModel load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(io::read_file(path));
}

}  // namespace faktlab::tinylm
