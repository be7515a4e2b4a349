// Copyright 2026 The xmer authors
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

#include "xmer/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "xmer/error.hpp"

namespace xmer {

namespace {

constexpr const char* kHeader = "xmer-config v1";

double to_double(const std::string& v, const std::string& key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw DataError("config: bad numeric value for '" + key + "': " + v);
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw DataError("config: bad integer value for '" + key + "': " + v);
  }
  return out;
}

std::vector<std::size_t> to_widths(const std::string& v,
                                   const std::string& key) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    out.push_back(static_cast<std::size_t>(
        to_u64(v.substr(start, comma - start), key)));
    start = comma + 1;
    if (comma == v.size()) break;
  }
  if (out.empty()) throw DataError("config: empty width list for " + key);
  return out;
}

std::string widths_str(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

LossConfig TrainConfig::loss_config() const {
  LossConfig c;
  c.lambda = effective_lambda();
  c.alpha = alpha;
  c.ridge = ridge;
  c.k = k == 0 ? embed_dim : k;
  c.margin = margin;
  return c;
}

void TrainConfig::validate() const {
  loss_config().validate();
  if (epochs < 1) throw InvalidArgument("config: epochs must be >= 1");
  if (embed_dim < 1) throw InvalidArgument("config: embed_dim must be >= 1");
  if (k > embed_dim) throw InvalidArgument("config: k exceeds embed_dim");
  if (!(lr > 0.0)) throw InvalidArgument("config: lr must be positive");
  if (split_fraction <= 0.0 || split_fraction >= 1.0) {
    throw InvalidArgument("config: split_fraction must lie in (0, 1)");
  }
  if (fraction <= 0.0 || fraction > 1.0) {
    throw InvalidArgument("config: fraction must lie in (0, 1]");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw InvalidArgument("config: dropout must lie in [0, 1)");
  }
  if (batch_mode == BatchMode::kMinibatch && batch_size < 8) {
    throw InvalidArgument(
        "config: minibatch covariance estimates need batch_size >= 8");
  }
  if (sessions < 1) throw InvalidArgument("config: sessions must be >= 1");
}

TrainConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kHeader) {
    throw DataError(std::string("config: expected header '") + kHeader + "'");
  }
  TrainConfig cfg;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("config line " + std::to_string(line_no) +
                      ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "lambda") {
      cfg.lambda = to_double(val, key);
    } else if (key == "alpha") {
      cfg.alpha = to_double(val, key);
    } else if (key == "ridge") {
      cfg.ridge = to_double(val, key);
    } else if (key == "embed_dim") {
      cfg.embed_dim = to_u64(val, key);
    } else if (key == "k") {
      cfg.k = to_u64(val, key);
    } else if (key == "lr") {
      cfg.lr = to_double(val, key);
    } else if (key == "epochs") {
      cfg.epochs = to_u64(val, key);
    } else if (key == "sessions") {
      cfg.sessions = to_u64(val, key);
    } else if (key == "seed") {
      cfg.seed = to_u64(val, key);
    } else if (key == "loss_mode") {
      if (val == "composite") cfg.loss_mode = LossMode::kComposite;
      else if (val == "cca-only") cfg.loss_mode = LossMode::kCcaOnly;
      else if (val == "kl-only") cfg.loss_mode = LossMode::kKlOnly;
      else throw DataError("config: unknown loss_mode '" + val + "'");
    } else if (key == "batch_mode") {
      if (val == "full") cfg.batch_mode = BatchMode::kFull;
      else if (val == "minibatch") cfg.batch_mode = BatchMode::kMinibatch;
      else throw DataError("config: unknown batch_mode '" + val + "'");
    } else if (key == "batch_size") {
      cfg.batch_size = to_u64(val, key);
    } else if (key == "music_encoder") {
      if (val == "mlp") cfg.music_encoder = EncoderKind::kMlp;
      else if (val == "bigru") cfg.music_encoder = EncoderKind::kBiGru;
      else throw DataError("config: unknown music_encoder '" + val + "'");
    } else if (key == "emotion_encoder") {
      if (val == "mlp") cfg.emotion_encoder = EncoderKind::kMlp;
      else if (val == "bigru") cfg.emotion_encoder = EncoderKind::kBiGru;
      else throw DataError("config: unknown emotion_encoder '" + val + "'");
    } else if (key == "music_widths") {
      cfg.music_widths = to_widths(val, key);
    } else if (key == "music_hidden") {
      cfg.music_hidden = to_u64(val, key);
    } else if (key == "music_post_widths") {
      cfg.music_post_widths = to_widths(val, key);
    } else if (key == "emotion_hidden") {
      cfg.emotion_hidden = to_u64(val, key);
    } else if (key == "emotion_post_widths") {
      cfg.emotion_post_widths = to_widths(val, key);
    } else if (key == "dropout") {
      cfg.dropout = to_double(val, key);
    } else if (key == "split_fraction") {
      cfg.split_fraction = to_double(val, key);
    } else if (key == "fraction") {
      cfg.fraction = to_double(val, key);
    } else if (key == "margin_convention") {
      if (val == "paper") cfg.margin = MarginConvention::kPaper;
      else if (val == "conventional") cfg.margin = MarginConvention::kConventional;
      else throw DataError("config: unknown margin_convention '" + val + "'");
    } else if (key == "kl_direction") {
      if (val == "query-to-candidate") {
        cfg.kl_direction = KlDirection::kQueryToCandidate;
      } else if (val == "candidate-to-query") {
        cfg.kl_direction = KlDirection::kCandidateToQuery;
      } else {
        throw DataError("config: unknown kl_direction '" + val + "'");
      }
    } else {
      throw DataError("config line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream out;
  char num[64];
  auto fmt = [&num](double v) {
    auto [end, ec] = std::to_chars(num, num + sizeof(num), v);
    (void)ec;
    return std::string(num, end);
  };
  out << kHeader << "\n";
  out << "lambda=" << fmt(cfg.lambda) << "\n";
  out << "alpha=" << fmt(cfg.alpha) << "\n";
  out << "ridge=" << fmt(cfg.ridge) << "\n";
  out << "embed_dim=" << cfg.embed_dim << "\n";
  out << "k=" << cfg.k << "\n";
  out << "lr=" << fmt(cfg.lr) << "\n";
  out << "epochs=" << cfg.epochs << "\n";
  out << "sessions=" << cfg.sessions << "\n";
  out << "seed=" << cfg.seed << "\n";
  out << "loss_mode=" << to_string(cfg.loss_mode) << "\n";
  out << "batch_mode="
      << (cfg.batch_mode == BatchMode::kFull ? "full" : "minibatch") << "\n";
  out << "batch_size=" << cfg.batch_size << "\n";
  out << "music_encoder=" << to_string(cfg.music_encoder) << "\n";
  out << "emotion_encoder=" << to_string(cfg.emotion_encoder) << "\n";
  out << "music_widths=" << widths_str(cfg.music_widths) << "\n";
  out << "music_hidden=" << cfg.music_hidden << "\n";
  out << "music_post_widths=" << widths_str(cfg.music_post_widths) << "\n";
  out << "emotion_hidden=" << cfg.emotion_hidden << "\n";
  out << "emotion_post_widths=" << widths_str(cfg.emotion_post_widths) << "\n";
  out << "dropout=" << fmt(cfg.dropout) << "\n";
  out << "split_fraction=" << fmt(cfg.split_fraction) << "\n";
  out << "fraction=" << fmt(cfg.fraction) << "\n";
  out << "margin_convention="
      << (cfg.margin == MarginConvention::kPaper ? "paper" : "conventional")
      << "\n";
  out << "kl_direction="
      << (cfg.kl_direction == KlDirection::kQueryToCandidate
              ? "query-to-candidate"
              : "candidate-to-query")
      << "\n";
  return out.str();
}

std::string config_hash(const TrainConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::kComposite: return "composite";
    case LossMode::kCcaOnly: return "cca-only";
    case LossMode::kKlOnly: return "kl-only";
  }
  return "composite";
}

std::string to_string(EncoderKind k) {
  return k == EncoderKind::kMlp ? "mlp" : "bigru";
}

}  // namespace xmer
