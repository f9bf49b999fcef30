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

#ifndef TRIALNER_NETWORK_H_
#define TRIALNER_NETWORK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trialner/corpus.h"
#include "trialner/numcore.h"
#include "trialner/rng.h"

namespace trialner {

// Lowercased surface -> dense index. <PAD> = 0 and <UNK> = 1 always.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  // Tokens listed in index order; the first two must be <PAD>, <UNK>.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Adds every lowercased surface seen at least `min_count` times, in order
  // of first appearance.
  static Vocabulary Build(const std::vector<std::vector<std::string>>& sentences,
                          int min_count = 1);

  int Index(std::string_view surface) const;
  bool Contains(std::string_view surface) const;
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  void Add(const std::string& lowered);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

enum class AttentionVariant { kNone, kDot, kMultiply, kAdd };

std::string_view VariantName(AttentionVariant v);
// Throws ConfigError on unknown names.
AttentionVariant ParseVariant(std::string_view name);

struct NetworkDims {
  size_t vocab_size = 2;
  size_t embed_dim = 100;       // d_e
  size_t hidden_dim = 128;      // d_h, per direction
  size_t attention_dim = 64;    // d_a, width of both additive MLP layers
  size_t output_dim = 256;      // d_z
  size_t decoder_dim = 256;     // d_m
  size_t num_tags = 1;          // K
  AttentionVariant variant = AttentionVariant::kMultiply;
  // Score alignment on BiLSTM states instead of word embeddings.
  bool scores_on_hidden = false;

  size_t RepresentationDim() const {
    return scores_on_hidden ? 2 * hidden_dim : embed_dim;
  }
  size_t DecoderInputDim() const {
    return variant == AttentionVariant::kNone ? 2 * hidden_dim : output_dim;
  }
  void Validate() const;
};

// Gate rows are ordered input, forget, cell candidate, output.
struct LstmBlock {
  DenseArray input_weights;      // [4H x d_e]
  DenseArray recurrent_weights;  // [4H x H]
  DenseArray bias;               // [4H]
};

// Every trainable array. Arrays of attention variants not in use are empty.
// The same struct carries gradients.
struct ModelParams {
  DenseArray embeddings;         // [V x d_e]
  LstmBlock forward_lstm;
  LstmBlock backward_lstm;
  DenseArray attn_bilinear;      // multiply: [r x r]
  DenseArray attn_w1;            // add: [d_a x 2r]
  DenseArray attn_b1;            // add: [d_a]
  DenseArray attn_w2;            // add: [d_a x d_a]
  DenseArray attn_b2;            // add: [d_a]
  DenseArray attn_v;             // add: [d_a]
  DenseArray attn_out_weights;   // [d_z x 4H]
  DenseArray attn_out_bias;      // [d_z]
  DenseArray dec_hidden_weights; // [d_m x d_in]
  DenseArray dec_hidden_bias;    // [d_m]
  DenseArray dec_out_weights;    // [K x d_m]
  DenseArray dec_out_bias;       // [K]
  DenseArray transitions;        // [(K+2) x (K+2)], see crf.h

  // Correct shapes, all zeros except the forbidden CRF transitions.
  static ModelParams Zeros(const NetworkDims& dims);
  // Glorot-uniform weights, zero biases, forget-gate bias 1.
  static ModelParams Initialize(const NetworkDims& dims, Rng& rng);

  // Visits (name, array) pairs in a fixed order.
  void ForEach(const std::function<void(const std::string&, DenseArray&)>& fn);
  void ForEach(const std::function<void(const std::string&, const DenseArray&)>&
                   fn) const;

  size_t AttentionParameterCount() const;
  bool AllFinite() const;
};

// Gradient-sized zeros for the same dims (forbidden transitions included as
// zero).
ModelParams ZeroGradients(const NetworkDims& dims);

struct EmbeddedSequence {
  DenseArray x;                  // [n x d_e], padded rows zero
  std::vector<uint8_t> mask;     // 1 = real token
};

EmbeddedSequence Embed(const std::vector<Token>& tokens, const Vocabulary& vocab,
                       const DenseArray& embeddings);

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

// One LSTM recurrence step. Throws NumericError on non-finite output.
LstmState LstmCellStep(std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, const LstmBlock& block);

// H = [forward ; backward] states, [n x 2H]. Padded positions give zero rows
// and leave the recurrent state untouched.
DenseArray BiLstmForward(const EmbeddedSequence& input, const ModelParams& params);

// Raw alignment scores over representations `reps` ([n x r]); masked
// columns get kMaskedScore.
constexpr double kMaskedScore = -1e30;
DenseArray AttentionScores(const DenseArray& reps,
                           const std::vector<uint8_t>& mask,
                           AttentionVariant variant, const ModelParams& params);

struct AttentionOutput {
  DenseArray weights;            // A, [n x n]
  DenseArray context;            // C, [n x 2H]
  DenseArray output;             // Z, [n x d_z]
};

AttentionOutput AttentionLayer(const DenseArray& hidden, const DenseArray& raw_scores,
                               const std::vector<uint8_t>& mask,
                               const ModelParams& params);

// P = W_o tanh(W_m z + b_m) + b_o per row.
DenseArray Emissions(const DenseArray& z, const ModelParams& params);

// ---------------------------------------------------------------------------
// Layer forward/backward pairs used by the full model and by the layer-level
// gradient checks.

struct LstmTrace {
  DenseArray gates;   // [n x 4H] post-activation i, f, g, o
  DenseArray cells;   // [n x H]
  DenseArray tanh_cells;
  DenseArray h_prev;  // [n x H] state fed into each step
  DenseArray c_prev;
  DenseArray h;       // [n x H] outputs, zero when masked
};

LstmTrace LstmForward(const DenseArray& x, const std::vector<uint8_t>& mask,
                      const LstmBlock& block, bool reverse);
// Accumulates into `grads` and `dx`.
void LstmBackward(const LstmTrace& trace, const DenseArray& x,
                  const std::vector<uint8_t>& mask, const LstmBlock& block,
                  bool reverse, const DenseArray& d_h, LstmBlock& grads,
                  DenseArray& dx);

struct AttentionTrace {
  AttentionVariant variant = AttentionVariant::kDot;
  DenseArray reps;       // representation used for scoring
  DenseArray hidden;     // H
  DenseArray scores;
  DenseArray weights;
  DenseArray concat;     // [C ; H]
  DenseArray output;     // Z
  DenseArray add_u, add_w;      // add: W1 halves applied to reps, [n x d_a]
  DenseArray add_a1, add_a2;    // add: [(n*n) x d_a]
};

AttentionTrace AttentionForward(const DenseArray& reps, const DenseArray& hidden,
                                const std::vector<uint8_t>& mask,
                                AttentionVariant variant,
                                const ModelParams& params);
void AttentionBackward(const AttentionTrace& trace, const std::vector<uint8_t>& mask,
                       const ModelParams& params, const DenseArray& d_output,
                       ModelParams& grads, DenseArray& d_reps,
                       DenseArray& d_hidden);

struct DecoderTrace {
  DenseArray input;      // Z after dropout
  DenseArray hidden;     // tanh layer output
  DenseArray emissions;  // P
};

DecoderTrace DecoderForward(const DenseArray& z, const std::vector<uint8_t>& mask,
                            const ModelParams& params);
void DecoderBackward(const DecoderTrace& trace, const std::vector<uint8_t>& mask,
                     const ModelParams& params, const DenseArray& d_emissions,
                     ModelParams& grads, DenseArray& d_input);

// ---------------------------------------------------------------------------
// Whole encoder.

struct ForwardCache {
  std::vector<int> ids;
  std::vector<uint8_t> mask;
  DenseArray x;              // embeddings after dropout
  DenseArray x_dropout;      // per-entry scale (0 or 1/(1-p)); empty = none
  LstmTrace forward_trace;
  LstmTrace backward_trace;
  DenseArray hidden;         // [n x 2H]
  AttentionTrace attention;  // unused for kNone
  DenseArray z;              // decoder input after dropout
  DenseArray z_dropout;
  DecoderTrace decoder;

  const DenseArray& emissions() const { return decoder.emissions; }
};

// `rng` may be null when `dropout` is 0 or training is false.
ForwardCache NetworkForward(const ModelParams& params, const NetworkDims& dims,
                            const std::vector<int>& ids,
                            const std::vector<uint8_t>& mask, bool training,
                            double dropout, Rng* rng);

// Gradients of a loss with upstream dLoss/dP for every parameter array.
// Padded rows of `d_emissions` are ignored. Throws NumericError on
// non-finite gradients.
ModelParams NetworkBackward(const ModelParams& params, const NetworkDims& dims,
                            const ForwardCache& cache,
                            const DenseArray& d_emissions,
                            bool train_embeddings = true);

// Word-vector text file: first line "V d", then "token v1 ... vd".
std::unordered_map<std::string, std::vector<double>> LoadWordVectors(
    const std::string& path, size_t* dim);
// Copies vectors for known vocabulary entries into `embeddings`; returns the
// number of rows replaced. Throws ConfigError on a dimension mismatch.
size_t ApplyWordVectors(
    const std::unordered_map<std::string, std::vector<double>>& vectors,
    const Vocabulary& vocab, DenseArray& embeddings);

}  // namespace trialner

#endif  // TRIALNER_NETWORK_H_
