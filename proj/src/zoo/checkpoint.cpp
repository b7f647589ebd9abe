#include "dpp/zoo/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "dpp/error.hpp"

namespace dpp {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'D', 'P', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

using ParamList = std::vector<net::Parameter<float>*>;

ParamList group_params(ModelSet& m, const std::string& group) {
  ParamList out;
  auto collect = [&](net::Parameter<float>& p) { out.push_back(&p); };
  if (group == "E") {
    m.para.enc.visit(collect);
    if (!m.para.shared_encoder) m.para.enc_x.visit(collect);
  } else if (group == "Dx") {
    m.para.dec_x.visit(collect);
  } else if (group == "Dz") {
    m.para.dec_z.visit(collect);
  } else if (group == "nsp") {
    m.nsp.visit(collect);
  } else if (group == "lmx") {
    m.aux.lm_x.visit(collect);
  } else if (group == "lmz") {
    m.aux.lm_z.visit(collect);
  } else if (group == "dis") {
    m.aux.dis.visit(collect);
  } else {
    throw std::invalid_argument("unknown checkpoint group: " + group);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string file) : bytes_(bytes), file_(std::move(file)) {}

  std::uint64_t u(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& what) const { throw LoadError(file_ + ": " + what); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail("truncated tensor file");
  }
  const std::string& bytes_;
  std::string file_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError(p.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_group(const ParamList& params, const fs::path& path) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index k = 0; k < p->value.size(); ++k) put_f32(out, p->value.data()[k]);
  }
  put_u64(out, fnv1a(out));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error(path.string() + ": cannot write");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error(path.string() + ": write failed");
}

void read_group(const ParamList& params, const fs::path& path) {
  if (!fs::exists(path)) throw LoadError(path.string() + ": missing tensor file");
  const std::string bytes = read_file(path);
  Reader r(bytes, path.string());
  if (bytes.size() < 8 + 4) r.fail("truncated tensor file");
  if (r.str(4) != std::string(kMagic, 4)) r.fail("bad magic");
  if (r.u32() != kVersion) r.fail("unsupported version");
  const std::uint32_t count = r.u32();
  if (count != params.size())
    r.fail("expected " + std::to_string(params.size()) + " tensors, found " + std::to_string(count));
  for (auto* p : params) {
    const std::string name = r.str(r.u32());
    if (name != p->name) r.fail("expected tensor " + p->name + ", found " + name);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != p->value.rows() || cols != p->value.cols())
      r.fail("shape mismatch for " + name + ": " + std::to_string(rows) + "x" + std::to_string(cols));
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const float f = r.f32();
      if (!std::isfinite(f)) r.fail("non-finite value in " + name);
      p->value.data()[k] = f;
    }
    p->zero_grad();
  }
  const std::size_t body = r.pos();
  const std::uint64_t stored = r.u(8);
  if (r.pos() != bytes.size()) r.fail("trailing bytes");
  if (stored != fnv1a(bytes.substr(0, body))) r.fail("checksum mismatch");
}

std::string join_groups(const std::vector<std::string>& groups) {
  std::string s;
  for (const auto& g : groups) s += (s.empty() ? "" : ",") + g;
  return s;
}

std::vector<std::string> split_groups(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string g; std::getline(ss, g, ',');)
    if (!g.empty()) out.push_back(g);
  return out;
}

}  // namespace

const std::vector<std::string>& checkpoint_groups() {
  static const std::vector<std::string> groups{"E", "Dx", "Dz", "nsp", "lmx", "lmz", "dis"};
  return groups;
}

void save_checkpoint(ModelSet& m, const std::string& dir, const std::vector<std::string>& groups) {
  const auto& chosen = groups.empty() ? checkpoint_groups() : groups;
  fs::create_directories(dir);
  const auto& hp = m.hp;
  std::ofstream meta(fs::path(dir) / "meta.txt", std::ios::trunc);
  meta << "format = 1\n"
       << "groups = " << join_groups(chosen) << "\n"
       << "emb_dim = " << hp.emb_dim << "\n"
       << "hidden = " << hp.hidden << "\n"
       << "attn_dim = " << hp.attention_dim() << "\n"
       << "dropout = " << hp.dropout << "\n"
       << "init_range = " << hp.init_range << "\n"
       << "lr = " << hp.lr << "\n"
       << "batch = " << hp.batch << "\n"
       << "beam = " << hp.beam << "\n"
       << "K = " << hp.K << "\n"
       << "max_decode_len = " << m.para.max_len << "\n"
       << "shared_encoder = " << (m.para.shared_encoder ? 1 : 0) << "\n"
       << "nsp_frozen = " << (m.nsp.frozen ? 1 : 0) << "\n"
       << "aux_frozen = " << (m.aux.frozen ? 1 : 0) << "\n"
       << "vocab_strategy = union-encoder/per-side-decoders\n"
       << "vocab_encoder = " << m.vocabs.encoder.fingerprint() << "\n"
       << "vocab_natural = " << m.vocabs.natural.fingerprint() << "\n"
       << "vocab_canonical = " << m.vocabs.canonical.fingerprint() << "\n"
       << "vocab_lf = " << m.vocabs.lf.fingerprint() << "\n";
  if (!meta) throw std::runtime_error(dir + "/meta.txt: write failed");
  for (const auto& g : chosen) write_group(group_params(m, g), fs::path(dir) / (g + ".bin"));
}

std::map<std::string, std::string> read_checkpoint_meta(const std::string& dir) {
  const fs::path path = fs::path(dir) / "meta.txt";
  if (!fs::exists(path)) throw LoadError(path.string() + ": missing metadata file");
  std::ifstream in(path);
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

ModelSet load_checkpoint(const std::string& dir, const Vocabularies& vocabs) {
  const auto kv = read_checkpoint_meta(dir);
  const std::string meta = (fs::path(dir) / "meta.txt").string();
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw LoadError(meta + ": missing key " + key);
    return it->second;
  };
  auto check_vocab = [&](const std::string& key, const Vocab& v) {
    if (get(key) != v.fingerprint())
      throw LoadError(meta + ": " + key + " fingerprint mismatch (checkpoint " + get(key) + ", supplied " +
                      v.fingerprint() + ")");
  };
  check_vocab("vocab_encoder", vocabs.encoder);
  check_vocab("vocab_natural", vocabs.natural);
  check_vocab("vocab_canonical", vocabs.canonical);
  check_vocab("vocab_lf", vocabs.lf);

  net::Hyperparams hp;
  try {
    hp.emb_dim = std::stoi(get("emb_dim"));
    hp.hidden = std::stoi(get("hidden"));
    hp.attn_dim = std::stoi(get("attn_dim"));
    hp.dropout = std::stod(get("dropout"));
    hp.init_range = std::stod(get("init_range"));
    hp.lr = std::stod(get("lr"));
    hp.batch = std::stoi(get("batch"));
    hp.beam = std::stoi(get("beam"));
    hp.K = std::stoi(get("K"));
    hp.max_decode_len = std::stoi(get("max_decode_len"));
  } catch (const std::logic_error& e) {
    throw LoadError(meta + ": malformed value (" + e.what() + ")");
  }
  std::mt19937_64 rng(0);
  ModelSet m = init_models(hp, vocabs, nullptr, rng, get("shared_encoder") == "1");
  for (const auto& g : split_groups(get("groups"))) read_group(group_params(m, g), fs::path(dir) / (g + ".bin"));
  m.nsp.frozen = get("nsp_frozen") == "1";
  m.aux.frozen = get("aux_frozen") == "1";
  return m;
}

}  // namespace dpp
