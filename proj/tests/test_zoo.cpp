#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dpp/error.hpp"
#include "dpp/zoo/checkpoint.hpp"
#include "fixtures.hpp"

using namespace dpp;
using dpp::testing::snapshot;
using dpp::testing::tiny_workspace;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dpp_test_zoo_" + name);
  fs::remove_all(p);
  return p;
}

std::string load_error(const fs::path& dir, const Vocabularies& v) {
  try {
    load_checkpoint(dir.string(), v);
  } catch (const LoadError& e) {
    return e.what();
  }
  return "";
}

void flip_byte(const fs::path& file, std::streamoff offset) {
  std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(offset);
  char c = 0;
  f.get(c);
  f.seekp(offset);
  f.put(static_cast<char>(c ^ 0x5a));
}

}  // namespace

TEST_CASE("checkpoint round trip restores every parameter bit for bit") {
  const Workspace ws = tiny_workspace();
  for (bool shared : {true, false}) {
    std::mt19937_64 rng(7);
    ModelSet m = init_models(ws.cfg.hp, ws.vocabs, nullptr, rng, shared);
    m.para.max_len = 9;
    m.nsp.frozen = true;
    m.aux.frozen = true;
    const auto dir = scratch(shared ? "shared" : "separate");
    save_checkpoint(m, dir.string());
    ModelSet back = load_checkpoint(dir.string(), ws.vocabs);
    CHECK(snapshot(back.para) == snapshot(m.para));
    CHECK(snapshot(back.nsp) == snapshot(m.nsp));
    CHECK(snapshot(back.aux) == snapshot(m.aux));
    CHECK(back.para.shared_encoder == shared);
    CHECK(back.para.max_len == 9);
    CHECK(back.nsp.frozen);
    CHECK(back.aux.frozen);
    const auto& u = ws.data.natural[0];
    CHECK(paraphrase(back, u, Direction::ToCanonical).tokens == paraphrase(m, u, Direction::ToCanonical).tokens);
    const auto meta = read_checkpoint_meta(dir.string());
    CHECK(meta.at("vocab_encoder") == ws.vocabs.encoder.fingerprint());
    CHECK(meta.at("hidden") == std::to_string(ws.cfg.hp.hidden));
  }
}

TEST_CASE("partial checkpoints load only the listed groups") {
  const Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  const auto dir = scratch("partial");
  save_checkpoint(m, dir.string(), {"E", "Dx", "Dz"});
  CHECK(fs::exists(dir / "E.bin"));
  CHECK_FALSE(fs::exists(dir / "nsp.bin"));
  ModelSet back = load_checkpoint(dir.string(), ws.vocabs);
  CHECK(snapshot(back.para) == snapshot(m.para));
}

TEST_CASE("damaged checkpoints raise load errors naming the file") {
  const Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  const auto dir = scratch("damaged");

  SUBCASE("flipped payload byte") {
    save_checkpoint(m, dir.string());
    flip_byte(dir / "Dz.bin", 64);
    const auto msg = load_error(dir, ws.vocabs);
    CHECK(msg.find("Dz.bin") != std::string::npos);
  }
  SUBCASE("truncated file") {
    save_checkpoint(m, dir.string());
    fs::resize_file(dir / "lmx.bin", fs::file_size(dir / "lmx.bin") / 2);
    CHECK(load_error(dir, ws.vocabs).find("lmx.bin") != std::string::npos);
  }
  SUBCASE("missing tensor file") {
    save_checkpoint(m, dir.string());
    fs::remove(dir / "dis.bin");
    CHECK(load_error(dir, ws.vocabs).find("dis.bin") != std::string::npos);
  }
  SUBCASE("missing metadata") {
    fs::create_directories(dir);
    CHECK(load_error(dir, ws.vocabs).find("meta.txt") != std::string::npos);
  }
  SUBCASE("non-finite value") {
    m.para.dec_x.b_o.value(0, 0) = std::numeric_limits<float>::quiet_NaN();
    save_checkpoint(m, dir.string());
    CHECK(load_error(dir, ws.vocabs).find("Dx.bin") != std::string::npos);
  }
  SUBCASE("different vocabulary") {
    save_checkpoint(m, dir.string());
    Vocabularies other = ws.vocabs;
    other.natural = Vocab::build(std::vector<std::vector<std::string>>{{"only", "words"}});
    CHECK(load_error(dir, other).find("vocab_natural") != std::string::npos);
  }
}

TEST_CASE("initialization is a pure function of the seed") {
  const Workspace ws = tiny_workspace();
  std::mt19937_64 a(11);
  std::mt19937_64 b(11);
  std::mt19937_64 c(12);
  ModelSet ma = init_models(ws.cfg.hp, ws.vocabs, nullptr, a);
  ModelSet mb = init_models(ws.cfg.hp, ws.vocabs, nullptr, b);
  ModelSet mc = init_models(ws.cfg.hp, ws.vocabs, nullptr, c);
  CHECK(snapshot(ma.para) == snapshot(mb.para));
  CHECK(snapshot(ma.para) != snapshot(mc.para));
  for (float v : snapshot(ma.para)) CHECK(std::abs(v) <= ws.cfg.hp.init_range + 1e-7);

  ModelSet fresh = with_fresh_paraphrase(mc, nullptr, 11, true);
  CHECK(snapshot(fresh.para) == snapshot(ma.para));
  CHECK(snapshot(fresh.nsp) == snapshot(mc.nsp));
  CHECK(snapshot(fresh.aux) == snapshot(mc.aux));
}

TEST_CASE("file embeddings overwrite matching rows") {
  const Workspace ws = tiny_workspace();
  const std::string word = ws.data.natural[0].tokens()[0];
  EmbeddingTable emb(ws.cfg.hp.emb_dim);
  const auto path = scratch("emb.txt");
  {
    std::ofstream out(path);
    out << word;
    for (int i = 0; i < ws.cfg.hp.emb_dim; ++i) out << ' ' << 0.5 + i;
    out << '\n';
  }
  std::mt19937_64 r(0);
  const auto loaded = EmbeddingTable::load(path.string(), {word}, ws.cfg.hp.emb_dim, r);
  std::mt19937_64 rng(3);
  ModelSet m = init_models(ws.cfg.hp, ws.vocabs, &loaded, rng);
  const int id = ws.vocabs.encoder.id(word);
  for (int i = 0; i < ws.cfg.hp.emb_dim; ++i) CHECK(m.para.enc.emb.value(i, id) == doctest::Approx(0.5 + i));

  EmbeddingTable wrong = EmbeddingTable::random({word}, ws.cfg.hp.emb_dim + 1, r);
  std::mt19937_64 rng2(3);
  CHECK_THROWS_AS(init_models(ws.cfg.hp, ws.vocabs, &wrong, rng2), ConfigError);
}

TEST_CASE("vocabularies cover their corpora") {
  const Workspace ws = tiny_workspace();
  for (const auto& u : ws.data.natural)
    for (const auto& t : u.tokens()) {
      CHECK(ws.vocabs.encoder.contains(t));
      CHECK(ws.vocabs.natural.contains(t));
    }
  for (const auto& u : ws.data.canonical)
    for (const auto& t : u.tokens()) {
      CHECK(ws.vocabs.encoder.contains(t));
      CHECK(ws.vocabs.canonical.contains(t));
    }
  for (const auto& p : ws.data.parser_train)
    for (const auto& t : p.lf.tokens()) CHECK(ws.vocabs.lf.contains(t));
}

TEST_CASE("beam decoding of width one agrees with greedy paraphrasing") {
  const Workspace ws = tiny_workspace();
  ModelSet m = fresh_models(ws);
  m.para.max_len = 8;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& u = ws.data.natural[i];
    const auto g = paraphrase(m, u, Direction::ToCanonical);
    const auto b = paraphrase(m, u, Direction::ToCanonical, DecodeMode::Beam, 1);
    CHECK(g.tokens == b.tokens);
    CHECK(g.log_prob == doctest::Approx(b.log_prob));
  }
  const auto batch = paraphrase_greedy(m, {ws.data.canonical[0].tokens()}, Direction::ToNatural);
  CHECK(batch.front().tokens == paraphrase(m, ws.data.canonical[0], Direction::ToNatural).tokens);
}
