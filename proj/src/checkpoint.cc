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

#include <bit>
#include <cstring>

#include "trialner/errors.h"
#include "trialner/formats.h"
#include "trialner/trainer.h"

namespace trialner {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "TNERCKPT";
constexpr size_t kPreambleSize = 16;  // magic + u64 header length

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t GetU64(std::string_view in, size_t pos) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  json arrays = json::array();
  uint64_t offset = 0;
  ckpt.params.ForEach([&](const std::string& name, const DenseArray& a) {
    const uint64_t bytes = a.size() * sizeof(double);
    arrays.push_back(
        {{"name", name}, {"shape", a.shape()}, {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
  });
  const json header = {{"format", "trialner-checkpoint"},
                       {"version", Checkpoint::kFormatVersion},
                       {"config", ckpt.config.ToJson()},
                       {"vocabulary", ckpt.vocab.tokens()},
                       {"entity_types", ckpt.tagset.entity_types()},
                       {"tags", ckpt.tagset.tags()},
                       {"arrays", std::move(arrays)}};
  const std::string text = header.dump();
  std::string out(kMagic);
  PutU64(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  ckpt.params.ForEach([&](const std::string&, const DenseArray& a) {
    for (double v : a.values()) PutU64(out, std::bit_cast<uint64_t>(v));
  });
  return out;
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
  if (bytes.size() < kPreambleSize || bytes.substr(0, kMagic.size()) != kMagic) {
    throw ParseError("corrupt checkpoint: bad magic at offset 0");
  }
  const uint64_t header_len = GetU64(bytes, kMagic.size());
  if (header_len > bytes.size() - kPreambleSize) {
    throw ParseError("corrupt checkpoint: header section at offset " +
                     std::to_string(kPreambleSize) + " truncated");
  }
  json header;
  try {
    header = json::parse(bytes.substr(kPreambleSize, header_len));
  } catch (const json::exception& e) {
    throw ParseError("corrupt checkpoint: header section at offset " +
                     std::to_string(kPreambleSize) + ": " + e.what());
  }
  Checkpoint c;
  const size_t data_start = kPreambleSize + header_len;
  try {
    if (header.value("format", "") != "trialner-checkpoint") {
      throw ParseError("corrupt checkpoint: not a trialner checkpoint");
    }
    const int version = header.at("version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw ConfigError("checkpoint format version " + std::to_string(version) +
                        " is not supported (expected " +
                        std::to_string(Checkpoint::kFormatVersion) + ")");
    }
    c.config = TrainConfig::FromJson(header.at("config"));
    c.vocab = Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
    c.tagset = TagSet(header.at("entity_types").get<std::vector<std::string>>());
    if (header.at("tags").get<std::vector<std::string>>() != c.tagset.tags()) {
      throw ParseError("corrupt checkpoint: tag list does not match entity types");
    }
    c.dims = c.config.Dims(c.vocab.size(), c.tagset.size());
    c.params = ModelParams::Zeros(c.dims);

    const json& manifest = header.at("arrays");
    size_t k = 0;
    c.params.ForEach([&](const std::string& name, DenseArray& a) {
      if (k >= manifest.size()) {
        throw ParseError("corrupt checkpoint: manifest lacks array " + name);
      }
      const json& entry = manifest[k++];
      if (entry.at("name").get<std::string>() != name) {
        throw ParseError("corrupt checkpoint: manifest entry " + std::to_string(k - 1) +
                         " is " + entry.at("name").get<std::string>() +
                         ", expected " + name);
      }
      if (entry.at("shape").get<std::vector<size_t>>() != a.shape()) {
        throw ParseError("corrupt checkpoint: array " + name + " has shape " +
                         entry.at("shape").dump() + ", expected " + a.ShapeString());
      }
      const uint64_t offset = entry.at("offset").get<uint64_t>();
      const uint64_t len = entry.at("bytes").get<uint64_t>();
      if (len != a.size() * sizeof(double)) {
        throw ParseError("corrupt checkpoint: array " + name + " byte count mismatch");
      }
      const uint64_t pos = data_start + offset;
      if (pos > bytes.size() || len > bytes.size() - pos) {
        throw ParseError("corrupt checkpoint: array section " + name +
                         " at offset " + std::to_string(pos) + " truncated");
      }
      for (size_t i = 0; i < a.size(); ++i) {
        a[i] = std::bit_cast<double>(GetU64(bytes, pos + 8 * i));
      }
      a.CheckFinite("checkpoint array " + name);
    });
    if (k != manifest.size()) {
      throw ParseError("corrupt checkpoint: unexpected extra arrays in manifest");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt checkpoint: header section: ") + e.what());
  }
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  WriteFile(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return DeserializeCheckpoint(ReadFile(path));
}

}  // namespace trialner
