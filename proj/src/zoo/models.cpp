#include "dpp/zoo/models.hpp"

#include <algorithm>

#include "dpp/error.hpp"

namespace dpp {

Vocabularies build_vocabularies(const std::vector<Utterance>& natural, const std::vector<Utterance>& canonical,
                                const std::vector<CanonicalPair>& parser_pairs) {
  Vocabularies v;
  std::vector<Utterance> both(natural.begin(), natural.end());
  both.insert(both.end(), canonical.begin(), canonical.end());
  v.encoder = Vocab::build(both);
  v.natural = Vocab::build(natural);
  v.canonical = Vocab::build(canonical);
  std::vector<std::vector<std::string>> lfs;
  for (const auto& p : parser_pairs) lfs.push_back(p.lf.tokens());
  v.lf = Vocab::build(lfs);
  return v;
}

void ParaphraseModel::visit(const net::Visitor<float>& f) {
  enc.visit(f);
  if (!shared_encoder) enc_x.visit(f);
  dec_x.visit(f);
  dec_z.visit(f);
}

void NaiveParser::visit(const net::Visitor<float>& f) {
  enc.visit(f);
  dec.visit(f);
}

void AuxiliaryBundle::visit(const net::Visitor<float>& f) {
  lm_x.visit(f);
  lm_z.visit(f);
  dis.visit(f);
}

namespace {

void seed_embeddings(net::Parameter<float>& table, const Vocab& vocab, const EmbeddingTable& emb) {
  for (int id = Vocab::kNumReserved; id < vocab.size(); ++id) {
    const std::string& tok = vocab.token(id);
    if (!emb.from_file(tok)) continue;
    const auto row = emb[tok];
    for (int k = 0; k < emb.dim(); ++k) table.value(k, id) = row[static_cast<std::size_t>(k)];
  }
}

}  // namespace

ModelSet init_models(const net::Hyperparams& hp, const Vocabularies& vocabs, const EmbeddingTable* emb,
                     std::mt19937_64& rng, bool shared_encoder) {
  hp.validate();
  if (emb != nullptr && emb->dim() != hp.emb_dim)
    throw ConfigError("embedding file dimension " + std::to_string(emb->dim()) + " does not match emb_dim " +
                      std::to_string(hp.emb_dim));
  const int E = hp.emb_dim;
  const int H = hp.hidden;
  const int A = hp.attention_dim();
  ModelSet m{hp, vocabs, {}, {}, {}};
  m.para.shared_encoder = shared_encoder;
  m.para.enc = net::BiEncoder<float>("E", vocabs.encoder.size(), E, H);
  if (!shared_encoder) m.para.enc_x = net::BiEncoder<float>("Ex", vocabs.encoder.size(), E, H);
  m.para.dec_x = net::AttnDecoder<float>("Dx", vocabs.natural.size(), E, H, 2 * H, A);
  m.para.dec_z = net::AttnDecoder<float>("Dz", vocabs.canonical.size(), E, H, 2 * H, A);
  m.nsp.enc = net::BiEncoder<float>("nsp.E", vocabs.canonical.size(), E, H);
  m.nsp.dec = net::AttnDecoder<float>("nsp.D", vocabs.lf.size(), E, H, 2 * H, A);
  m.aux.lm_x = net::LanguageModel<float>("lmx", vocabs.natural.size(), E, H);
  m.aux.lm_z = net::LanguageModel<float>("lmz", vocabs.canonical.size(), E, H);
  m.aux.dis = net::CnnClassifier<float>("dis", vocabs.encoder.size(), E);
  m.para.max_len = m.nsp.max_len = std::max(1, hp.max_decode_len);

  net::init_uniform(m.para, rng, hp.init_range);
  net::init_uniform(m.nsp, rng, hp.init_range);
  net::init_uniform(m.aux, rng, hp.init_range);

  if (emb != nullptr) {
    seed_embeddings(m.para.enc.emb, vocabs.encoder, *emb);
    if (!shared_encoder) seed_embeddings(m.para.enc_x.emb, vocabs.encoder, *emb);
    seed_embeddings(m.para.dec_x.emb, vocabs.natural, *emb);
    seed_embeddings(m.para.dec_z.emb, vocabs.canonical, *emb);
    seed_embeddings(m.nsp.enc.emb, vocabs.canonical, *emb);
    seed_embeddings(m.aux.lm_x.emb, vocabs.natural, *emb);
    seed_embeddings(m.aux.lm_z.emb, vocabs.canonical, *emb);
    seed_embeddings(m.aux.dis.emb, vocabs.encoder, *emb);
  }
  return m;
}

ModelSet with_fresh_paraphrase(const ModelSet& m, const EmbeddingTable* emb, std::uint64_t seed, bool shared_encoder) {
  std::mt19937_64 rng(seed);
  ModelSet fresh = init_models(m.hp, m.vocabs, emb, rng, shared_encoder);
  fresh.para.max_len = m.para.max_len;
  fresh.nsp = m.nsp;
  fresh.aux = m.aux;
  return fresh;
}

void copy_parameters(ParaphraseModel& to, ParaphraseModel& from) {
  std::vector<net::Parameter<float>*> src;
  from.visit([&](net::Parameter<float>& p) { src.push_back(&p); });
  std::size_t i = 0;
  to.visit([&](net::Parameter<float>& p) {
    if (i >= src.size() || src[i]->name != p.name) throw std::logic_error("copy_parameters: architecture mismatch");
    p.value = src[i]->value;
    ++i;
  });
  to.max_len = from.max_len;
}

std::vector<int> encoder_ids(const ModelSet& m, const std::vector<std::string>& tokens) {
  return m.vocabs.encoder.encode(tokens);
}

std::vector<int> target_ids(const ModelSet& m, const std::vector<std::string>& tokens, Direction d) {
  return (d == Direction::ToCanonical ? m.vocabs.canonical : m.vocabs.natural).encode(tokens);
}

namespace {

Paraphrase to_paraphrase(const ModelSet& m, const net::Hypothesis& h, Direction d) {
  const Vocab& v = d == Direction::ToCanonical ? m.vocabs.canonical : m.vocabs.natural;
  return Paraphrase{v.decode(h.tokens), h.log_prob, h.finished};
}

}  // namespace

Paraphrase paraphrase(ModelSet& m, const Utterance& u, Direction d, DecodeMode mode, int width) {
  const auto src = encoder_ids(m, u.tokens());
  const auto s2s = m.para.seq2seq(d);
  if (mode == DecodeMode::Beam) return to_paraphrase(m, net::beam(s2s, src, width).front(), d);
  return to_paraphrase(m, net::greedy(s2s, {src}).front(), d);
}

std::vector<Paraphrase> paraphrase_greedy(ModelSet& m, const std::vector<std::vector<std::string>>& inputs,
                                          Direction d) {
  std::vector<std::vector<int>> srcs;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].empty()) continue;
    srcs.push_back(encoder_ids(m, inputs[i]));
    where.push_back(i);
  }
  std::vector<Paraphrase> out(inputs.size());
  if (srcs.empty()) return out;
  const auto hyps = net::greedy(m.para.seq2seq(d), srcs);
  for (std::size_t k = 0; k < hyps.size(); ++k) out[where[k]] = to_paraphrase(m, hyps[k], d);
  return out;
}

namespace {

ParseOutcome outcome_from(const std::vector<std::string>& lf_tokens, const Database& db) {
  ParseOutcome out{join(lf_tokens), std::nullopt, Denotation(ExecError{"parse failure", ""}), true};
  out.lf = LogicalForm::try_parse(lf_tokens);
  if (out.lf) {
    out.parse_failed = false;
    out.denotation = execute(*out.lf, db);
  }
  return out;
}

}  // namespace

ParseOutcome parse_canonical(ModelSet& m, const std::vector<std::string>& canonical, const Database& db) {
  return parse_canonical_batch(m, {canonical}, db).front();
}

std::vector<ParseOutcome> parse_canonical_batch(ModelSet& m, const std::vector<std::vector<std::string>>& canonical,
                                                const Database& db) {
  std::vector<std::vector<int>> srcs;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (canonical[i].empty()) continue;
    srcs.push_back(m.vocabs.canonical.encode(canonical[i]));
    where.push_back(i);
  }
  std::vector<ParseOutcome> out(canonical.size(), outcome_from({}, db));
  if (srcs.empty()) return out;
  const auto hyps = net::greedy(m.nsp.seq2seq(), srcs);
  for (std::size_t k = 0; k < hyps.size(); ++k) out[where[k]] = outcome_from(m.vocabs.lf.decode(hyps[k].tokens), db);
  return out;
}

}  // namespace dpp
