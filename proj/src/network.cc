// Copyright 2026 The TrialNER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trialner/network.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trialner/crf.h"
#include "trialner/errors.h"

namespace trialner {
namespace {

void AddInPlace(DenseArray& acc, const DenseArray& delta) {
  if (!acc.SameShape(delta)) {
    throw ShapeError("cannot accumulate " + delta.ShapeString() + " into " +
                     acc.ShapeString());
  }
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += delta[i];
}

void AddColumnSums(DenseArray& acc, const DenseArray& m) {
  for (size_t r = 0; r < m.rows(); ++r) {
    for (size_t c = 0; c < m.cols(); ++c) acc[c] += m(r, c);
  }
}

void AddRowBias(DenseArray& m, const DenseArray& bias,
                const std::vector<uint8_t>& mask) {
  for (size_t r = 0; r < m.rows(); ++r) {
    if (!mask[r]) continue;
    for (size_t c = 0; c < m.cols(); ++c) m(r, c) += bias[c];
  }
}

void ZeroMaskedRows(DenseArray& m, const std::vector<uint8_t>& mask) {
  for (size_t r = 0; r < m.rows(); ++r) {
    if (!mask[r]) std::fill(m.row(r).begin(), m.row(r).end(), 0.0);
  }
}

void TanhRows(DenseArray& m, const std::vector<uint8_t>& mask) {
  for (size_t r = 0; r < m.rows(); ++r) {
    if (!mask[r]) continue;
    for (double& v : m.row(r)) v = std::tanh(v);
  }
}

DenseArray GlorotMatrix(size_t rows, size_t cols, Rng& rng) {
  DenseArray m = DenseArray::Matrix(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.values()) v = rng.Uniform(-limit, limit);
  return m;
}

// Splits columns [0, half) and [half, 2*half) of an [m x 2*half] matrix.
std::pair<DenseArray, DenseArray> SplitColumns(const DenseArray& w, size_t half) {
  DenseArray left = DenseArray::Matrix(w.rows(), half);
  DenseArray right = DenseArray::Matrix(w.rows(), half);
  for (size_t r = 0; r < w.rows(); ++r) {
    for (size_t c = 0; c < half; ++c) {
      left(r, c) = w(r, c);
      right(r, c) = w(r, half + c);
    }
  }
  return {std::move(left), std::move(right)};
}

// Applies gate nonlinearities to one pre-activation row and advances the
// cell. `gates` receives i, f, g, o after activation.
void CellFromPreactivation(std::span<const double> pre,
                           std::span<const double> c_prev, std::span<double> gates,
                           std::span<double> c, std::span<double> tanh_c,
                           std::span<double> h) {
  const size_t hd = c.size();
  for (size_t j = 0; j < hd; ++j) {
    const double ig = Sigmoid(pre[j]);
    const double fg = Sigmoid(pre[hd + j]);
    const double gg = std::tanh(pre[2 * hd + j]);
    const double og = Sigmoid(pre[3 * hd + j]);
    gates[j] = ig;
    gates[hd + j] = fg;
    gates[2 * hd + j] = gg;
    gates[3 * hd + j] = og;
    c[j] = fg * c_prev[j] + ig * gg;
    tanh_c[j] = std::tanh(c[j]);
    h[j] = og * tanh_c[j];
  }
}

void CheckBlock(const LstmBlock& block) {
  const size_t g = block.input_weights.rows();
  const size_t hd = block.recurrent_weights.cols();
  if (g != 4 * hd || block.recurrent_weights.rows() != g || block.bias.size() != g) {
    throw ShapeError("inconsistent LSTM block: input " +
                     block.input_weights.ShapeString() + ", recurrent " +
                     block.recurrent_weights.ShapeString() + ", bias " +
                     block.bias.ShapeString());
  }
}

void ComputeScores(const DenseArray& reps, const std::vector<uint8_t>& mask,
                   AttentionVariant variant, const ModelParams& params,
                   AttentionTrace& trace) {
  const size_t n = reps.rows(), r = reps.cols();
  if (mask.size() != n) throw ShapeError("attention mask length mismatch");
  trace.variant = variant;
  trace.reps = reps;
  switch (variant) {
    case AttentionVariant::kDot:
      trace.scores = MatmulTransposedB(reps, reps);
      break;
    case AttentionVariant::kMultiply: {
      if (params.attn_bilinear.shape() != std::vector<size_t>{r, r}) {
        throw ConfigError("multiply attention needs a [" + std::to_string(r) +
                          "x" + std::to_string(r) + "] bilinear matrix, have " +
                          params.attn_bilinear.ShapeString());
      }
      trace.scores = MatmulTransposedB(Matmul(reps, params.attn_bilinear), reps);
      break;
    }
    case AttentionVariant::kAdd: {
      const size_t da = params.attn_w2.rows();
      if (da == 0 || params.attn_w1.shape() != std::vector<size_t>{da, 2 * r} ||
          params.attn_b1.size() != da ||
          params.attn_w2.shape() != std::vector<size_t>{da, da} ||
          params.attn_b2.size() != da || params.attn_v.size() != da) {
        throw ConfigError("add attention parameters missing or misshapen");
      }
      auto [w1_left, w1_right] = SplitColumns(params.attn_w1, r);
      trace.add_u = MatmulTransposedB(reps, w1_left);
      trace.add_w = MatmulTransposedB(reps, w1_right);
      trace.add_a1 = DenseArray::Matrix(n * n, da);
      trace.add_a2 = DenseArray::Matrix(n * n, da);
      trace.scores = DenseArray::Matrix(n, n);
      for (size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        for (size_t j = 0; j < n; ++j) {
          if (!mask[j]) continue;
          std::span<double> a1 = trace.add_a1.row(i * n + j);
          std::span<double> a2 = trace.add_a2.row(i * n + j);
          for (size_t k = 0; k < da; ++k) {
            a1[k] = std::tanh(trace.add_u(i, k) + trace.add_w(j, k) +
                              params.attn_b1[k]);
          }
          for (size_t k = 0; k < da; ++k) {
            a2[k] = std::tanh(Dot(params.attn_w2.row(k), a1) + params.attn_b2[k]);
          }
          trace.scores(i, j) = Dot(params.attn_v.data(), a2);
        }
      }
      break;
    }
    case AttentionVariant::kNone:
      throw ConfigError("no alignment scores for attention variant 'none'");
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (!mask[i] || !mask[j]) trace.scores(i, j) = kMaskedScore;
    }
  }
}

void ApplyAttention(const DenseArray& hidden, const DenseArray& scores,
                    const std::vector<uint8_t>& mask, const ModelParams& params,
                    AttentionTrace& trace) {
  const size_t n = hidden.rows(), h2 = hidden.cols();
  if (scores.rows() != n || scores.cols() != n || mask.size() != n) {
    throw ShapeError("attention scores " + scores.ShapeString() +
                     " do not match " + std::to_string(n) + " positions");
  }
  const size_t dz = params.attn_out_weights.rows();
  if (params.attn_out_weights.cols() != 2 * h2 || params.attn_out_bias.size() != dz) {
    throw ConfigError("attention output projection " +
                      params.attn_out_weights.ShapeString() +
                      " does not take [c; h] of width " + std::to_string(2 * h2));
  }
  std::vector<size_t> real;
  for (size_t j = 0; j < n; ++j) {
    if (mask[j]) real.push_back(j);
  }
  trace.hidden = hidden;
  trace.scores = scores;
  trace.weights = DenseArray::Matrix(n, n);
  if (real.empty()) {
    throw ContractError("attention row has no unmasked columns");
  }
  std::vector<double> row(real.size());
  for (size_t i : real) {
    for (size_t q = 0; q < real.size(); ++q) row[q] = scores(i, real[q]);
    const std::vector<double> p = SoftmaxRow(row);
    for (size_t q = 0; q < real.size(); ++q) trace.weights(i, real[q]) = p[q];
  }
  const DenseArray context = Matmul(trace.weights, hidden);
  trace.concat = DenseArray::Matrix(n, 2 * h2);
  for (size_t i : real) {
    std::copy(context.row(i).begin(), context.row(i).end(),
              trace.concat.row(i).begin());
    std::copy(hidden.row(i).begin(), hidden.row(i).end(),
              trace.concat.row(i).begin() + h2);
  }
  trace.output = MatmulTransposedB(trace.concat, params.attn_out_weights);
  AddRowBias(trace.output, params.attn_out_bias, mask);
  TanhRows(trace.output, mask);
  ZeroMaskedRows(trace.output, mask);
}

std::vector<uint8_t> AllReal(size_t n) { return std::vector<uint8_t>(n, 1); }

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<PAD>", "<UNK>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<PAD>" || tokens[1] != "<UNK>") {
    throw ConfigError("vocabulary must start with <PAD>, <UNK>");
  }
  for (std::string& t : tokens) {
    if (!index_.emplace(t, static_cast<int>(tokens_.size())).second) {
      throw ConfigError("duplicate vocabulary entry \"" + t + "\"");
    }
    tokens_.push_back(std::move(t));
  }
}

Vocabulary Vocabulary::Build(
    const std::vector<std::vector<std::string>>& sentences, int min_count) {
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& s : sentences) {
    for (const std::string& tok : s) {
      const std::string low = Lowercase(tok);
      if (counts[low]++ == 0) order.push_back(low);
    }
  }
  Vocabulary v;
  for (const std::string& t : order) {
    if (counts[t] >= min_count) v.Add(t);
  }
  return v;
}

void Vocabulary::Add(const std::string& lowered) {
  if (index_.emplace(lowered, static_cast<int>(tokens_.size())).second) {
    tokens_.push_back(lowered);
  }
}

int Vocabulary::Index(std::string_view surface) const {
  auto it = index_.find(Lowercase(surface));
  if (it == index_.end() || it->second == kPad) return kUnk;
  return it->second;
}

bool Vocabulary::Contains(std::string_view surface) const {
  return Index(surface) != kUnk;
}

std::string_view VariantName(AttentionVariant v) {
  switch (v) {
    case AttentionVariant::kNone: return "none";
    case AttentionVariant::kDot: return "dot";
    case AttentionVariant::kMultiply: return "multiply";
    case AttentionVariant::kAdd: return "add";
  }
  return "unknown";
}

AttentionVariant ParseVariant(std::string_view name) {
  if (name == "none") return AttentionVariant::kNone;
  if (name == "dot") return AttentionVariant::kDot;
  if (name == "multiply") return AttentionVariant::kMultiply;
  if (name == "add") return AttentionVariant::kAdd;
  throw ConfigError("unknown attention variant \"" + std::string(name) + "\"");
}

void NetworkDims::Validate() const {
  if (vocab_size < 2 || embed_dim == 0 || hidden_dim == 0 || attention_dim == 0 ||
      output_dim == 0 || decoder_dim == 0 || num_tags == 0) {
    throw ConfigError("all network dimensions must be >= 1 (vocabulary >= 2)");
  }
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams ModelParams::Zeros(const NetworkDims& dims) {
  dims.Validate();
  const size_t e = dims.embed_dim, h = dims.hidden_dim, r = dims.RepresentationDim();
  const size_t da = dims.attention_dim;
  ModelParams p;
  p.embeddings = DenseArray::Matrix(dims.vocab_size, e);
  for (LstmBlock* b : {&p.forward_lstm, &p.backward_lstm}) {
    b->input_weights = DenseArray::Matrix(4 * h, e);
    b->recurrent_weights = DenseArray::Matrix(4 * h, h);
    b->bias = DenseArray::Vector(4 * h);
  }
  if (dims.variant == AttentionVariant::kMultiply) {
    p.attn_bilinear = DenseArray::Matrix(r, r);
  }
  if (dims.variant == AttentionVariant::kAdd) {
    p.attn_w1 = DenseArray::Matrix(da, 2 * r);
    p.attn_b1 = DenseArray::Vector(da);
    p.attn_w2 = DenseArray::Matrix(da, da);
    p.attn_b2 = DenseArray::Vector(da);
    p.attn_v = DenseArray::Vector(da);
  }
  if (dims.variant != AttentionVariant::kNone) {
    p.attn_out_weights = DenseArray::Matrix(dims.output_dim, 4 * h);
    p.attn_out_bias = DenseArray::Vector(dims.output_dim);
  }
  p.dec_hidden_weights = DenseArray::Matrix(dims.decoder_dim, dims.DecoderInputDim());
  p.dec_hidden_bias = DenseArray::Vector(dims.decoder_dim);
  p.dec_out_weights = DenseArray::Matrix(dims.num_tags, dims.decoder_dim);
  p.dec_out_bias = DenseArray::Vector(dims.num_tags);
  p.transitions = NewTransitionTable(dims.num_tags);
  return p;
}

ModelParams ZeroGradients(const NetworkDims& dims) {
  ModelParams g = ModelParams::Zeros(dims);
  g.transitions.Fill(0.0);
  return g;
}

ModelParams ModelParams::Initialize(const NetworkDims& dims, Rng& rng) {
  ModelParams p = Zeros(dims);
  p.ForEach([&](const std::string& name, DenseArray& a) {
    if (a.rank() != 2 || name == "crf.transitions") return;
    a = GlorotMatrix(a.rows(), a.cols(), rng);
  });
  if (!p.attn_v.empty()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(p.attn_v.size() + 1));
    for (double& v : p.attn_v.values()) v = rng.Uniform(-limit, limit);
  }
  std::fill(p.embeddings.row(Vocabulary::kPad).begin(),
            p.embeddings.row(Vocabulary::kPad).end(), 0.0);
  const size_t h = dims.hidden_dim;
  for (LstmBlock* b : {&p.forward_lstm, &p.backward_lstm}) {
    for (size_t j = h; j < 2 * h; ++j) b->bias[j] = 1.0;
  }
  return p;
}

void ModelParams::ForEach(
    const std::function<void(const std::string&, DenseArray&)>& fn) {
  fn("embeddings", embeddings);
  fn("lstm_fwd.input_weights", forward_lstm.input_weights);
  fn("lstm_fwd.recurrent_weights", forward_lstm.recurrent_weights);
  fn("lstm_fwd.bias", forward_lstm.bias);
  fn("lstm_bwd.input_weights", backward_lstm.input_weights);
  fn("lstm_bwd.recurrent_weights", backward_lstm.recurrent_weights);
  fn("lstm_bwd.bias", backward_lstm.bias);
  fn("attn.bilinear", attn_bilinear);
  fn("attn.w1", attn_w1);
  fn("attn.b1", attn_b1);
  fn("attn.w2", attn_w2);
  fn("attn.b2", attn_b2);
  fn("attn.v", attn_v);
  fn("attn.out_weights", attn_out_weights);
  fn("attn.out_bias", attn_out_bias);
  fn("decoder.hidden_weights", dec_hidden_weights);
  fn("decoder.hidden_bias", dec_hidden_bias);
  fn("decoder.out_weights", dec_out_weights);
  fn("decoder.out_bias", dec_out_bias);
  fn("crf.transitions", transitions);
}

void ModelParams::ForEach(
    const std::function<void(const std::string&, const DenseArray&)>& fn) const {
  const_cast<ModelParams*>(this)->ForEach(
      [&](const std::string& name, DenseArray& a) { fn(name, a); });
}

size_t ModelParams::AttentionParameterCount() const {
  return attn_bilinear.size() + attn_w1.size() + attn_b1.size() + attn_w2.size() +
         attn_b2.size() + attn_v.size();
}

bool ModelParams::AllFinite() const {
  bool ok = true;
  ForEach([&](const std::string&, const DenseArray& a) { ok = ok && a.AllFinite(); });
  return ok;
}

// ---------------------------------------------------------------------------
// Embedding

EmbeddedSequence Embed(const std::vector<Token>& tokens, const Vocabulary& vocab,
                       const DenseArray& embeddings) {
  if (tokens.empty()) throw ContractError("cannot embed an empty sentence");
  if (embeddings.rows() != vocab.size()) {
    throw ShapeError("embedding matrix " + embeddings.ShapeString() +
                     " does not match vocabulary of " +
                     std::to_string(vocab.size()));
  }
  EmbeddedSequence out;
  out.x = DenseArray::Matrix(tokens.size(), embeddings.cols());
  out.mask = AllReal(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const auto src = embeddings.row(vocab.Index(tokens[i].surface));
    std::copy(src.begin(), src.end(), out.x.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// LSTM

LstmState LstmCellStep(std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, const LstmBlock& block) {
  CheckBlock(block);
  const size_t hd = block.recurrent_weights.cols();
  if (x.size() != block.input_weights.cols() || h_prev.size() != hd ||
      c_prev.size() != hd) {
    throw ShapeError("LSTM step input sizes do not match the parameter block");
  }
  std::vector<double> pre(4 * hd);
  for (size_t k = 0; k < 4 * hd; ++k) {
    pre[k] = Dot(block.input_weights.row(k), x) +
             Dot(block.recurrent_weights.row(k), h_prev) + block.bias[k];
  }
  std::vector<double> gates(4 * hd), tanh_c(hd);
  LstmState out{std::vector<double>(hd), std::vector<double>(hd)};
  CellFromPreactivation(pre, c_prev, gates, out.c, tanh_c, out.h);
  for (size_t j = 0; j < hd; ++j) {
    if (!std::isfinite(out.h[j]) || !std::isfinite(out.c[j])) {
      throw NumericError("LSTM cell produced a non-finite state");
    }
  }
  return out;
}

LstmTrace LstmForward(const DenseArray& x, const std::vector<uint8_t>& mask,
                      const LstmBlock& block, bool reverse) {
  CheckBlock(block);
  const size_t n = x.rows(), hd = block.recurrent_weights.cols();
  if (mask.size() != n) throw ShapeError("LSTM mask length mismatch");
  LstmTrace tr;
  tr.gates = DenseArray::Matrix(n, 4 * hd);
  tr.cells = DenseArray::Matrix(n, hd);
  tr.tanh_cells = DenseArray::Matrix(n, hd);
  tr.h_prev = DenseArray::Matrix(n, hd);
  tr.c_prev = DenseArray::Matrix(n, hd);
  tr.h = DenseArray::Matrix(n, hd);
  const DenseArray proj = MatmulTransposedB(x, block.input_weights);
  std::vector<double> h(hd, 0.0), c(hd, 0.0), pre(4 * hd);
  for (size_t step = 0; step < n; ++step) {
    const size_t t = reverse ? n - 1 - step : step;
    if (!mask[t]) continue;
    for (size_t k = 0; k < 4 * hd; ++k) {
      pre[k] = proj(t, k) + block.bias[k] + Dot(block.recurrent_weights.row(k), h);
    }
    std::copy(h.begin(), h.end(), tr.h_prev.row(t).begin());
    std::copy(c.begin(), c.end(), tr.c_prev.row(t).begin());
    CellFromPreactivation(pre, tr.c_prev.row(t), tr.gates.row(t), tr.cells.row(t),
                          tr.tanh_cells.row(t), tr.h.row(t));
    std::copy(tr.h.row(t).begin(), tr.h.row(t).end(), h.begin());
    std::copy(tr.cells.row(t).begin(), tr.cells.row(t).end(), c.begin());
  }
  tr.h.CheckFinite("LSTM forward");
  tr.cells.CheckFinite("LSTM forward");
  return tr;
}

void LstmBackward(const LstmTrace& trace, const DenseArray& x,
                  const std::vector<uint8_t>& mask, const LstmBlock& block,
                  bool reverse, const DenseArray& d_h, LstmBlock& grads,
                  DenseArray& dx) {
  const size_t n = x.rows(), hd = block.recurrent_weights.cols();
  DenseArray d_pre = DenseArray::Matrix(n, 4 * hd);
  std::vector<double> dh_next(hd, 0.0), dc_next(hd, 0.0);
  for (size_t step = 0; step < n; ++step) {
    // Walk in the opposite order of the forward scan.
    const size_t t = reverse ? step : n - 1 - step;
    if (!mask[t]) continue;
    const auto g = trace.gates.row(t);
    const auto tc = trace.tanh_cells.row(t);
    const auto cp = trace.c_prev.row(t);
    auto dp = d_pre.row(t);
    for (size_t j = 0; j < hd; ++j) {
      const double ig = g[j], fg = g[hd + j], gg = g[2 * hd + j], og = g[3 * hd + j];
      const double dh = d_h(t, j) + dh_next[j];
      const double d_o = dh * tc[j];
      const double dc = dc_next[j] + dh * og * (1.0 - tc[j] * tc[j]);
      dp[j] = dc * gg * ig * (1.0 - ig);
      dp[hd + j] = dc * cp[j] * fg * (1.0 - fg);
      dp[2 * hd + j] = dc * ig * (1.0 - gg * gg);
      dp[3 * hd + j] = d_o * og * (1.0 - og);
      dc_next[j] = dc * fg;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (size_t k = 0; k < 4 * hd; ++k) {
      const double s = dp[k];
      const auto u = block.recurrent_weights.row(k);
      for (size_t j = 0; j < hd; ++j) dh_next[j] += u[j] * s;
    }
  }
  AddInPlace(grads.input_weights, MatmulTransposedA(d_pre, x));
  AddInPlace(grads.recurrent_weights, MatmulTransposedA(d_pre, trace.h_prev));
  AddColumnSums(grads.bias, d_pre);
  AddInPlace(dx, Matmul(d_pre, block.input_weights));
}

DenseArray BiLstmForward(const EmbeddedSequence& input, const ModelParams& params) {
  if (input.x.rows() == 0) throw ContractError("empty sequence");
  const LstmTrace f = LstmForward(input.x, input.mask, params.forward_lstm, false);
  const LstmTrace b = LstmForward(input.x, input.mask, params.backward_lstm, true);
  const size_t n = input.x.rows(), hd = f.h.cols();
  DenseArray out = DenseArray::Matrix(n, 2 * hd);
  for (size_t t = 0; t < n; ++t) {
    std::copy(f.h.row(t).begin(), f.h.row(t).end(), out.row(t).begin());
    std::copy(b.h.row(t).begin(), b.h.row(t).end(), out.row(t).begin() + hd);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attention

DenseArray AttentionScores(const DenseArray& reps, const std::vector<uint8_t>& mask,
                           AttentionVariant variant, const ModelParams& params) {
  AttentionTrace trace;
  ComputeScores(reps, mask, variant, params, trace);
  return std::move(trace.scores);
}

AttentionOutput AttentionLayer(const DenseArray& hidden, const DenseArray& raw_scores,
                               const std::vector<uint8_t>& mask,
                               const ModelParams& params) {
  AttentionTrace trace;
  ApplyAttention(hidden, raw_scores, mask, params, trace);
  AttentionOutput out;
  out.context = Matmul(trace.weights, hidden);
  out.weights = std::move(trace.weights);
  out.output = std::move(trace.output);
  return out;
}

AttentionTrace AttentionForward(const DenseArray& reps, const DenseArray& hidden,
                                const std::vector<uint8_t>& mask,
                                AttentionVariant variant,
                                const ModelParams& params) {
  AttentionTrace trace;
  ComputeScores(reps, mask, variant, params, trace);
  const DenseArray scores = trace.scores;
  ApplyAttention(hidden, scores, mask, params, trace);
  return trace;
}

void AttentionBackward(const AttentionTrace& trace, const std::vector<uint8_t>& mask,
                       const ModelParams& params, const DenseArray& d_output,
                       ModelParams& grads, DenseArray& d_reps,
                       DenseArray& d_hidden) {
  const size_t n = trace.hidden.rows(), h2 = trace.hidden.cols();
  DenseArray d_pre = d_output;
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < d_pre.cols(); ++k) {
      const double z = trace.output(i, k);
      d_pre(i, k) = mask[i] ? d_pre(i, k) * (1.0 - z * z) : 0.0;
    }
  }
  AddInPlace(grads.attn_out_weights, MatmulTransposedA(d_pre, trace.concat));
  AddColumnSums(grads.attn_out_bias, d_pre);
  const DenseArray d_concat = Matmul(d_pre, params.attn_out_weights);
  DenseArray d_context = DenseArray::Matrix(n, h2);
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < h2; ++k) {
      d_context(i, k) = d_concat(i, k);
      d_hidden(i, k) += d_concat(i, h2 + k);
    }
  }
  // C = A H.
  const DenseArray d_weights = MatmulTransposedB(d_context, trace.hidden);
  AddInPlace(d_hidden, MatmulTransposedA(trace.weights, d_context));

  // Row softmax.
  DenseArray d_scores = DenseArray::Matrix(n, n);
  for (size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double inner = Dot(trace.weights.row(i), d_weights.row(i));
    for (size_t j = 0; j < n; ++j) {
      if (mask[j]) d_scores(i, j) = trace.weights(i, j) * (d_weights(i, j) - inner);
    }
  }

  const DenseArray& reps = trace.reps;
  switch (trace.variant) {
    case AttentionVariant::kDot:
      AddInPlace(d_reps, Matmul(d_scores, reps));
      AddInPlace(d_reps, MatmulTransposedA(d_scores, reps));
      break;
    case AttentionVariant::kMultiply: {
      const DenseArray& w = params.attn_bilinear;
      AddInPlace(d_reps, Matmul(d_scores, MatmulTransposedB(reps, w)));
      AddInPlace(d_reps, MatmulTransposedA(d_scores, Matmul(reps, w)));
      AddInPlace(grads.attn_bilinear,
                 MatmulTransposedA(reps, Matmul(d_scores, reps)));
      break;
    }
    case AttentionVariant::kAdd: {
      const size_t da = params.attn_w2.rows(), r = reps.cols();
      DenseArray d_u = DenseArray::Matrix(n, da);
      DenseArray d_w = DenseArray::Matrix(n, da);
      std::vector<double> d_pre2(da), d_pre1(da);
      for (size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        for (size_t j = 0; j < n; ++j) {
          if (!mask[j]) continue;
          const double g = d_scores(i, j);
          const auto a1 = trace.add_a1.row(i * n + j);
          const auto a2 = trace.add_a2.row(i * n + j);
          for (size_t k = 0; k < da; ++k) {
            grads.attn_v[k] += g * a2[k];
            d_pre2[k] = g * params.attn_v[k] * (1.0 - a2[k] * a2[k]);
            grads.attn_b2[k] += d_pre2[k];
          }
          std::fill(d_pre1.begin(), d_pre1.end(), 0.0);
          for (size_t k = 0; k < da; ++k) {
            const double s = d_pre2[k];
            auto gw2 = grads.attn_w2.row(k);
            const auto w2 = params.attn_w2.row(k);
            for (size_t m = 0; m < da; ++m) {
              gw2[m] += s * a1[m];
              d_pre1[m] += w2[m] * s;
            }
          }
          for (size_t m = 0; m < da; ++m) {
            d_pre1[m] *= 1.0 - a1[m] * a1[m];
            grads.attn_b1[m] += d_pre1[m];
            d_u(i, m) += d_pre1[m];
            d_w(j, m) += d_pre1[m];
          }
        }
      }
      auto [w1_left, w1_right] = SplitColumns(params.attn_w1, r);
      const DenseArray g_left = MatmulTransposedA(d_u, reps);
      const DenseArray g_right = MatmulTransposedA(d_w, reps);
      for (size_t k = 0; k < da; ++k) {
        for (size_t c = 0; c < r; ++c) {
          grads.attn_w1(k, c) += g_left(k, c);
          grads.attn_w1(k, r + c) += g_right(k, c);
        }
      }
      AddInPlace(d_reps, Matmul(d_u, w1_left));
      AddInPlace(d_reps, Matmul(d_w, w1_right));
      break;
    }
    case AttentionVariant::kNone:
      break;
  }
}

// ---------------------------------------------------------------------------
// Decoder

DecoderTrace DecoderForward(const DenseArray& z, const std::vector<uint8_t>& mask,
                            const ModelParams& params) {
  if (params.dec_hidden_weights.cols() != z.cols()) {
    throw ShapeError("decoder expects inputs of width " +
                     std::to_string(params.dec_hidden_weights.cols()) + ", got " +
                     z.ShapeString());
  }
  DecoderTrace tr;
  tr.input = z;
  tr.hidden = MatmulTransposedB(z, params.dec_hidden_weights);
  AddRowBias(tr.hidden, params.dec_hidden_bias, mask);
  TanhRows(tr.hidden, mask);
  ZeroMaskedRows(tr.hidden, mask);
  tr.emissions = MatmulTransposedB(tr.hidden, params.dec_out_weights);
  AddRowBias(tr.emissions, params.dec_out_bias, mask);
  ZeroMaskedRows(tr.emissions, mask);
  return tr;
}

void DecoderBackward(const DecoderTrace& trace, const std::vector<uint8_t>& mask,
                     const ModelParams& params, const DenseArray& d_emissions,
                     ModelParams& grads, DenseArray& d_input) {
  DenseArray dp = d_emissions;
  ZeroMaskedRows(dp, mask);
  AddInPlace(grads.dec_out_weights, MatmulTransposedA(dp, trace.hidden));
  AddColumnSums(grads.dec_out_bias, dp);
  DenseArray d_hidden = Matmul(dp, params.dec_out_weights);
  for (size_t i = 0; i < d_hidden.size(); ++i) {
    d_hidden[i] *= 1.0 - trace.hidden[i] * trace.hidden[i];
  }
  AddInPlace(grads.dec_hidden_weights, MatmulTransposedA(d_hidden, trace.input));
  AddColumnSums(grads.dec_hidden_bias, d_hidden);
  AddInPlace(d_input, Matmul(d_hidden, params.dec_hidden_weights));
}

DenseArray Emissions(const DenseArray& z, const ModelParams& params) {
  return DecoderForward(z, AllReal(z.rows()), params).emissions;
}

// ---------------------------------------------------------------------------
// Whole encoder

ForwardCache NetworkForward(const ModelParams& params, const NetworkDims& dims,
                            const std::vector<int>& ids,
                            const std::vector<uint8_t>& mask, bool training,
                            double dropout, Rng* rng) {
  const size_t n = ids.size();
  if (n == 0) throw ContractError("empty sequence");
  if (mask.size() != n) throw ShapeError("mask length differs from ids");
  if (std::none_of(mask.begin(), mask.end(), [](uint8_t m) { return m != 0; })) {
    throw ContractError("sequence has no real tokens");
  }
  const bool drop = training && dropout > 0.0;
  if (drop && rng == nullptr) throw ContractError("dropout needs a random source");
  const double keep_scale = drop ? 1.0 / (1.0 - dropout) : 1.0;
  auto make_dropout = [&](size_t rows, size_t cols) {
    DenseArray m = DenseArray::Matrix(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
      if (!mask[i]) continue;
      for (double& v : m.row(i)) v = rng->Bernoulli(dropout) ? 0.0 : keep_scale;
    }
    return m;
  };

  ForwardCache c;
  c.ids = ids;
  c.mask = mask;
  const size_t e = params.embeddings.cols();
  c.x = DenseArray::Matrix(n, e);
  for (size_t t = 0; t < n; ++t) {
    if (!mask[t]) continue;
    const int id = ids[t];
    if (id < 0 || static_cast<size_t>(id) >= params.embeddings.rows()) {
      throw ContractError("token id " + std::to_string(id) + " out of range");
    }
    const auto src = params.embeddings.row(id);
    std::copy(src.begin(), src.end(), c.x.row(t).begin());
  }
  if (drop) {
    c.x_dropout = make_dropout(n, e);
    for (size_t i = 0; i < c.x.size(); ++i) c.x[i] *= c.x_dropout[i];
  }

  c.forward_trace = LstmForward(c.x, mask, params.forward_lstm, false);
  c.backward_trace = LstmForward(c.x, mask, params.backward_lstm, true);
  const size_t hd = dims.hidden_dim;
  c.hidden = DenseArray::Matrix(n, 2 * hd);
  for (size_t t = 0; t < n; ++t) {
    const auto f = c.forward_trace.h.row(t), b = c.backward_trace.h.row(t);
    std::copy(f.begin(), f.end(), c.hidden.row(t).begin());
    std::copy(b.begin(), b.end(), c.hidden.row(t).begin() + hd);
  }

  if (dims.variant == AttentionVariant::kNone) {
    c.z = c.hidden;
  } else {
    const DenseArray& reps = dims.scores_on_hidden ? c.hidden : c.x;
    c.attention = AttentionForward(reps, c.hidden, mask, dims.variant, params);
    c.z = c.attention.output;
  }
  if (drop) {
    c.z_dropout = make_dropout(n, c.z.cols());
    for (size_t i = 0; i < c.z.size(); ++i) c.z[i] *= c.z_dropout[i];
  }
  c.decoder = DecoderForward(c.z, mask, params);
  c.decoder.emissions.CheckFinite("emissions");
  return c;
}

ModelParams NetworkBackward(const ModelParams& params, const NetworkDims& dims,
                            const ForwardCache& cache,
                            const DenseArray& d_emissions,
                            bool train_embeddings) {
  const size_t n = cache.ids.size(), hd = dims.hidden_dim;
  if (d_emissions.rows() != n || d_emissions.cols() != dims.num_tags) {
    throw ShapeError("upstream gradient " + d_emissions.ShapeString() +
                     " does not match emissions");
  }
  ModelParams grads = ZeroGradients(dims);
  DenseArray d_z = DenseArray::Matrix(n, cache.z.cols());
  DecoderBackward(cache.decoder, cache.mask, params, d_emissions, grads, d_z);
  if (!cache.z_dropout.empty()) {
    for (size_t i = 0; i < d_z.size(); ++i) d_z[i] *= cache.z_dropout[i];
  }

  DenseArray d_hidden = DenseArray::Matrix(n, 2 * hd);
  DenseArray d_x = DenseArray::Matrix(n, cache.x.cols());
  if (dims.variant == AttentionVariant::kNone) {
    AddInPlace(d_hidden, d_z);
  } else {
    DenseArray d_reps = DenseArray::Matrix(n, dims.RepresentationDim());
    AttentionBackward(cache.attention, cache.mask, params, d_z, grads, d_reps,
                      d_hidden);
    AddInPlace(dims.scores_on_hidden ? d_hidden : d_x, d_reps);
  }

  DenseArray d_fwd = DenseArray::Matrix(n, hd), d_bwd = DenseArray::Matrix(n, hd);
  for (size_t t = 0; t < n; ++t) {
    for (size_t j = 0; j < hd; ++j) {
      d_fwd(t, j) = d_hidden(t, j);
      d_bwd(t, j) = d_hidden(t, hd + j);
    }
  }
  LstmBackward(cache.forward_trace, cache.x, cache.mask, params.forward_lstm, false,
               d_fwd, grads.forward_lstm, d_x);
  LstmBackward(cache.backward_trace, cache.x, cache.mask, params.backward_lstm, true,
               d_bwd, grads.backward_lstm, d_x);

  if (!cache.x_dropout.empty()) {
    for (size_t i = 0; i < d_x.size(); ++i) d_x[i] *= cache.x_dropout[i];
  }
  if (train_embeddings) {
    for (size_t t = 0; t < n; ++t) {
      if (!cache.mask[t]) continue;
      auto dst = grads.embeddings.row(cache.ids[t]);
      const auto src = d_x.row(t);
      for (size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
  grads.ForEach([](const std::string& name, const DenseArray& a) {
    a.CheckFinite("gradient of " + name);
  });
  return grads;
}

// ---------------------------------------------------------------------------
// Pre-trained vectors

std::unordered_map<std::string, std::vector<double>> LoadWordVectors(
    const std::string& path, size_t* dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word vector file " + path);
  std::string line;
  size_t count = 0, d = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty vector file");
  {
    std::istringstream hs(line);
    if (!(hs >> count >> d) || d == 0) {
      throw ParseError(path + ": line 1: expected \"V d\" header");
    }
  }
  std::unordered_map<std::string, std::vector<double>> out;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> v(d);
    for (size_t k = 0; k < d; ++k) {
      if (!(ls >> v[k])) {
        throw ParseError(path + ": line " + std::to_string(line_no) +
                         ": expected " + std::to_string(d) + " values");
      }
    }
    out.emplace(Lowercase(word), std::move(v));
  }
  if (dim) *dim = d;
  return out;
}

size_t ApplyWordVectors(
    const std::unordered_map<std::string, std::vector<double>>& vectors,
    const Vocabulary& vocab, DenseArray& embeddings) {
  size_t replaced = 0;
  for (size_t i = 2; i < vocab.size(); ++i) {
    auto it = vectors.find(vocab.tokens()[i]);
    if (it == vectors.end()) continue;
    if (it->second.size() != embeddings.cols()) {
      throw ConfigError("word vectors have dimension " +
                        std::to_string(it->second.size()) + ", embeddings " +
                        std::to_string(embeddings.cols()));
    }
    std::copy(it->second.begin(), it->second.end(), embeddings.row(i).begin());
    ++replaced;
  }
  return replaced;
}

}  // namespace trialner
