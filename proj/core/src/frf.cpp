#include "hrlf/frf.hpp"

#include "hrlf/ops.hpp"

namespace hrlf::frf {

namespace {

constexpr auto kN = static_cast<double>(kNumModalities);

struct Factors {
  std::array<FactorizedPair, kNumModalities> pairs;
  // translations[a][b] = D(Q_a, U_b)
  std::array<std::array<Var, kNumModalities>, kNumModalities> translations;
};

Factors compute_factors(const ModalityVars& z, const FrfParams& params) {
  Factors f;
  for (std::size_t m = 0; m < kNumModalities; ++m) f.pairs[m] = factorize(z[m], data::kModalities[m], params);
  for (std::size_t a = 0; a < kNumModalities; ++a) {
    for (std::size_t b = 0; b < kNumModalities; ++b) {
      f.translations[a][b] = translate(f.pairs[a].sentiment, f.pairs[b].specific, params);
    }
  }
  return f;
}

TranslationLoss translation_terms(const ModalityVars& z, const Factors& f, FrfOptions options) {
  Var self = Var::scalar(0.0);
  Var cross = Var::scalar(0.0);
  for (std::size_t a = 0; a < kNumModalities; ++a) {
    for (std::size_t b = 0; b < kNumModalities; ++b) {
      Var d = mean_distance(f.translations[a][b], options.detach_targets ? z[b].detach() : z[b], options);
      if (a == b) {
        self = ag::add(self, d);
      } else {
        cross = ag::add(cross, d);
      }
    }
  }
  self = ag::scale(self, 1.0 / kN);
  cross = ag::scale(cross, 1.0 / (kN * kN - kN));
  Var total = ag::add(self, cross);
  return {self, cross, total};
}

Var reconstruction_term(const Factors& f, const FrfParams& params, FrfOptions options) {
  Var total = Var::scalar(0.0);
  for (std::size_t a = 0; a < kNumModalities; ++a) {
    for (std::size_t b = 0; b < kNumModalities; ++b) {
      // Q-bar_{b,a} re-encodes the translation of (Q_b, U_a) with E^S_a
      const Var q_bar = params.sentiment_encoders[a](f.translations[b][a]);
      const Var& target = f.pairs[a].sentiment;
      total = ag::add(total, mean_distance(q_bar, options.detach_targets ? target.detach() : target, options));
    }
  }
  return ag::scale(total, 1.0 / (kN * kN));
}

}  // namespace

FrfParams::FrfParams(Index dim, Rng& rng) : dim_(dim) {
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    sentiment_encoders[m] = nn::Mlp({dim, dim, dim}, true, rng);
    modality_encoders[m] = nn::Mlp({dim, dim, dim}, true, rng);
  }
  decoder = nn::Mlp({2 * dim, 2 * dim, dim}, false, rng);
}

void FrfParams::collect(nn::ParamList& out, std::string_view prefix) const {
  for (auto m : data::kModalities) {
    const auto name = std::string(data::modality_name(m));
    sentiment_encoders[data::index_of(m)].collect(out, nn::join_name(prefix, "sentiment." + name));
    modality_encoders[data::index_of(m)].collect(out, nn::join_name(prefix, "specific." + name));
  }
  decoder.collect(out, nn::join_name(prefix, "decoder"));
}

FactorizedPair factorize(const Var& z, Modality m, const FrfParams& params) {
  const auto i = data::index_of(m);
  return {params.sentiment_encoders[i](z), params.modality_encoders[i](z)};
}

Var translate(const Var& q_alpha, const Var& u_beta, const FrfParams& params) {
  const std::array<Var, 2> parts{q_alpha, u_beta};
  return params.decoder(ag::concat_cols(parts));
}

Var mean_distance(const Var& a, const Var& b, FrfOptions options) {
  const Var diff = ag::sub(a, b);
  return ag::mean(options.squared_norm ? ag::row_sq_norm(diff) : ag::row_norm(diff));
}

TranslationLoss loss_trans(const ModalityVars& z, const FrfParams& params, FrfOptions options) {
  return translation_terms(z, compute_factors(z, params), options);
}

Var loss_recon(const ModalityVars& z, const FrfParams& params, FrfOptions options) {
  return reconstruction_term(compute_factors(z, params), params, options);
}

FrfLoss loss_frf(const ModalityVars& z, const FrfParams& params, FrfOptions options) {
  const Factors f = compute_factors(z, params);
  auto trans = translation_terms(z, f, options);
  Var recon = reconstruction_term(f, params, options);
  Var total = ag::add(trans.total, recon);
  return {trans.self, trans.cross, trans.total, recon, total};
}

}  // namespace hrlf::frf
