#include "beats/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "beats/errors.hpp"

namespace beats {

namespace fs = std::filesystem;

std::string label_name(Label label) {
  switch (label) {
    case Label::kRequest:
      return "Request";
    case Label::kQuestion:
      return "Question";
    case Label::kOrder:
      return "Order";
  }
  return "?";
}

Label label_from_name(const std::string& name) {
  if (name == "Request") return Label::kRequest;
  if (name == "Question") return Label::kQuestion;
  if (name == "Order") return Label::kOrder;
  throw ValidationError("unknown label: " + name);
}

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split: " + name);
}

std::vector<const UtteranceRecord*> Dataset::split_view(Split split) const {
  std::vector<const UtteranceRecord*> out;
  for (const auto& r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(kNumClasses, 0);
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.label)];
  return counts;
}

namespace {

std::string join_tokens(const std::vector<std::size_t>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

std::vector<std::size_t> parse_tokens(const std::string& s, const std::string& context) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(std::stoul(tok));
    } catch (const std::exception&) {
      throw IoError(context + ": bad token id '" + tok + "'");
    }
  }
  if (out.empty()) throw IoError(context + ": empty token list");
  return out;
}

}  // namespace

void write_manifest(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "id\tpath\tbengali\tenglish\tlabel\tspeaker\tsplit\n";
  for (const auto& r : dataset.records) {
    out << r.id << '\t' << r.wav_path << '\t' << join_tokens(r.bengali.tokens) << '\t'
        << join_tokens(r.english.tokens) << '\t' << label_name(r.label) << '\t' << r.speaker
        << '\t' << split_name(r.split) << '\n';
  }
  if (!out) throw IoError(path + ": write failed");
}

Dataset load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  Dataset ds;
  ds.dir = fs::path(path).parent_path().string();
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty manifest");
  if (line != "id\tpath\tbengali\tenglish\tlabel\tspeaker\tsplit")
    throw IoError(path + ": unexpected header '" + line + "'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    const std::string context = path + ":" + std::to_string(lineno);
    if (fields.size() != 7)
      throw IoError(context + ": expected 7 fields, got " + std::to_string(fields.size()));
    UtteranceRecord r;
    r.id = fields[0];
    r.wav_path = fields[1];
    r.bengali.tokens = parse_tokens(fields[2], context);
    r.bengali.lang = TokenSequence::Lang::kBengali;
    r.english.tokens = parse_tokens(fields[3], context);
    r.english.lang = TokenSequence::Lang::kEnglish;
    r.label = label_from_name(fields[4]);
    try {
      r.speaker = std::stoi(fields[5]);
    } catch (const std::exception&) {
      throw IoError(context + ": bad speaker id '" + fields[5] + "'");
    }
    r.split = split_from_name(fields[6]);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

void load_audio(Dataset& dataset) {
  for (auto& r : dataset.records)
    r.audio = read_wav((fs::path(dataset.dir) / r.wav_path).string());
}

namespace {

void fnv1a_bytes(std::uint64_t& h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
}

void fnv1a_file(std::uint64_t& h, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    fnv1a_bytes(h, buf, static_cast<std::size_t>(in.gcount()));
}

}  // namespace

std::uint64_t dataset_checksum(const std::string& manifest_path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv1a_file(h, manifest_path);
  const Dataset ds = load_manifest(manifest_path);
  for (const auto& r : ds.records) fnv1a_file(h, (fs::path(ds.dir) / r.wav_path).string());
  return h;
}

std::string checksum_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace beats
