#include "cpdsde/synth.hpp"

#include "cpdsde/errors.hpp"

#include <cmath>
#include <numbers>

namespace cpdsde::synth {

std::string to_string(NoiseFamily f) { return f == NoiseFamily::gaussian ? "gaussian" : "gumbel"; }

std::string to_string(ChangeType t) {
  switch (t) {
    case ChangeType::jump:
      return "jump";
    case ChangeType::trend:
      return "trend";
    case ChangeType::volatility:
      return "volatility";
    case ChangeType::mixed:
      return "mixed";
  }
  return "unknown";
}

nlohmann::json to_json(const SegmentSpec& s) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"length", s.length},          {"noise", to_string(s.noise)}, {"mean", vec(s.mean)},
          {"scale", vec(s.scale)},       {"slope", vec(s.slope)},       {"correlation", s.correlation},
          {"continuous", s.continuous}};
}

nlohmann::json to_json(const CorpusParams& p) {
  return {{"length", p.length},
          {"jump", p.jump},
          {"slope_change", p.slope_change},
          {"volatility_factor", p.volatility_factor},
          {"correlation", p.correlation}};
}

double gumbel_sample(double location, double scale, Engine& engine) {
  if (!(scale > 0.0)) throw ContractError("gumbel_sample: scale must be positive");
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double u = 0.0;
  do {
    u = uniform(engine);
  } while (u <= 0.0 || u >= 1.0);
  return location - scale * std::log(-std::log(u));
}

SyntheticDataset generate(const std::vector<SegmentSpec>& segments, std::uint64_t seed) {
  if (segments.size() < 2) throw InputError("generate: need at least 2 segments");
  const Eigen::Index D = segments.front().mean.size();
  long total = 0;
  for (const auto& s : segments) {
    if (s.length < 2) throw InputError("generate: segment length must be >= 2");
    if (s.mean.size() != D || s.scale.size() != D || s.slope.size() != D || D < 1) {
      throw InputError("generate: segment dimension mismatch");
    }
    if ((s.scale.array() <= 0.0).any()) throw InputError("generate: noise scale must be > 0");
    if (s.correlation != 0.0 && D != 2) throw InputError("generate: correlation needs 2 channels");
    if (!(std::abs(s.correlation) < 1.0)) throw InputError("generate: |correlation| must be < 1");
    total += s.length;
  }

  Engine engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix values(total, D);
  std::vector<long> labels;
  Vector level = Vector::Zero(D);
  Vector prev_end = Vector::Zero(D);
  long offset = 0;
  for (std::size_t s_idx = 0; s_idx < segments.size(); ++s_idx) {
    const auto& seg = segments[s_idx];
    level = seg.continuous && s_idx > 0 ? Vector(prev_end + seg.mean) : seg.mean;
    for (long k = 0; k < seg.length; ++k) {
      Vector eps(D);
      for (Eigen::Index j = 0; j < D; ++j) {
        eps(j) = seg.noise == NoiseFamily::gaussian
                     ? normal(engine)
                     : gumbel_sample(-std::numbers::egamma, 1.0, engine);
      }
      if (seg.correlation != 0.0) {
        const double rho = seg.correlation;
        eps(1) = rho * eps(0) + std::sqrt(1.0 - rho * rho) * eps(1);
      }
      values.row(offset + k) =
          (level + seg.slope * static_cast<double>(k) + seg.scale.cwiseProduct(eps)).transpose();
    }
    prev_end = level + seg.slope * static_cast<double>(seg.length);
    offset += seg.length;
    if (s_idx + 1 < segments.size()) labels.push_back(offset);
  }

  nlohmann::json params;
  params["seed"] = seed;
  params["segments"] = nlohmann::json::array();
  for (const auto& s : segments) params["segments"].push_back(to_json(s));

  return SyntheticDataset{0,
                          "custom",
                          TimeSeries::from_values(std::move(values)),
                          ChangePointLabels(std::move(labels), total),
                          seed,
                          ChangeType::jump,
                          std::move(params)};
}

namespace {

struct RowPlan {
  std::string name;
  ChangeType type;
  std::vector<SegmentSpec> segments;
};

SegmentSpec flat(long length, int dims, NoiseFamily noise = NoiseFamily::gaussian) {
  SegmentSpec s;
  s.length = length;
  s.noise = noise;
  s.mean = Vector::Zero(dims);
  s.scale = Vector::Ones(dims);
  s.slope = Vector::Zero(dims);
  return s;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec1(double a) { return Vector::Constant(1, a); }

RowPlan plan_for(int index, const CorpusParams& p) {
  const long half = p.length / 2;
  const long rest = p.length - half;
  const double f = p.volatility_factor;
  RowPlan plan;
  switch (index) {
    case 1: {  // Gumbel channel changes scale, Gaussian channel steady
      plan = {"gumbel_scale_change_gaussian_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      a.noise = b.noise = NoiseFamily::gumbel;
      b.scale = vec2(f, 1.0);
      plan.segments = {a, b};
      break;
    }
    case 2: {
      plan = {"both_gumbel_scale_change_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2, NoiseFamily::gumbel);
      auto b = flat(rest, 2, NoiseFamily::gumbel);
      b.scale = vec2(f, f);
      plan.segments = {a, b};
      break;
    }
    case 3: {
      plan = {"gumbel_scale_change_gumbel_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2, NoiseFamily::gumbel);
      auto b = flat(rest, 2, NoiseFamily::gumbel);
      b.scale = vec2(f, 1.0);
      plan.segments = {a, b};
      break;
    }
    case 4: {
      plan = {"gaussian_covariance_change_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.correlation = p.correlation;
      plan.segments = {a, b};
      break;
    }
    case 5: {
      plan = {"single_fracture_both_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.continuous = true;
      b.slope = vec2(p.slope_change, p.slope_change);
      plan.segments = {a, b};
      break;
    }
    case 6: {
      plan = {"gaussian_noise_change_both_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.scale = vec2(f, f);
      plan.segments = {a, b};
      break;
    }
    case 7: {
      plan = {"gaussian_noise_change_one_2d", ChangeType::volatility, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.scale = vec2(f, 1.0);
      plan.segments = {a, b};
      break;
    }
    case 8: {
      plan = {"single_fracture_one_2d", ChangeType::trend, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.continuous = true;
      b.slope = vec2(p.slope_change, 0.0);
      plan.segments = {a, b};
      break;
    }
    case 9: {
      plan = {"single_fracture_1d", ChangeType::trend, {}};
      auto a = flat(half, 1);
      auto b = flat(rest, 1);
      b.continuous = true;
      b.slope = vec1(p.slope_change);
      plan.segments = {a, b};
      break;
    }
    case 10: {
      plan = {"steps_and_fractures_1d", ChangeType::mixed, {}};
      const long q = p.length / 4;
      auto s0 = flat(q, 1);
      auto s1 = flat(q, 1);
      s1.mean = vec1(p.jump);
      auto s2 = flat(q, 1);
      s2.continuous = true;
      s2.slope = vec1(2.0 * p.slope_change);
      auto s3 = flat(p.length - 3 * q, 1);
      s3.continuous = true;
      s3.mean = vec1(-p.jump);
      plan.segments = {s0, s1, s2, s3};
      break;
    }
    case 11: {
      plan = {"single_step_one_2d", ChangeType::jump, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.mean = vec2(p.jump, 0.0);
      plan.segments = {a, b};
      break;
    }
    case 12: {
      plan = {"single_step_1d", ChangeType::jump, {}};
      auto a = flat(half, 1);
      auto b = flat(rest, 1);
      b.mean = vec1(p.jump);
      plan.segments = {a, b};
      break;
    }
    case 13: {
      plan = {"single_step_both_2d", ChangeType::jump, {}};
      auto a = flat(half, 2);
      auto b = flat(rest, 2);
      b.mean = vec2(p.jump, p.jump);
      plan.segments = {a, b};
      break;
    }
    default:
      throw InputError("corpus row must be in 1.." + std::to_string(kCorpusSize));
  }
  return plan;
}

}  // namespace

SyntheticDataset corpus_row(int index, std::uint64_t seed, const CorpusParams& params) {
  if (params.length < 8) throw InputError("corpus length must be >= 8");
  const auto plan = plan_for(index, params);
  const std::uint64_t row_seed = derive_seed(seed, static_cast<std::uint64_t>(index));
  auto ds = generate(plan.segments, row_seed);
  if (index == 1) {
    // Second channel is Gaussian throughout; draw it from its own stream.
    auto gaussian_plan = plan.segments;
    for (auto& s : gaussian_plan) s.noise = NoiseFamily::gaussian;
    const auto g = generate(gaussian_plan, derive_seed(row_seed, 2));
    Matrix values = ds.series.values();
    values.col(1) = g.series.values().col(1);
    ds.series = TimeSeries::from_values(std::move(values));
    ds.params["segments_channel_1"] = g.params["segments"];
  }
  ds.index = index;
  ds.name = plan.name;
  ds.cp_type = plan.type;
  ds.params["index"] = index;
  ds.params["name"] = plan.name;
  ds.params["cp_type"] = to_string(plan.type);
  ds.params["corpus_seed"] = seed;
  ds.params["corpus_params"] = to_json(params);
  ds.params["gumbel_noise"] = "centred (location -gamma) before scaling";
  return ds;
}

std::vector<SyntheticDataset> corpus(std::uint64_t seed, const CorpusParams& params) {
  std::vector<SyntheticDataset> out;
  for (int i = 1; i <= kCorpusSize; ++i) out.push_back(corpus_row(i, seed, params));
  return out;
}

SyntheticDataset demo_series(std::uint64_t seed) {
  auto a = flat(200, 1);
  auto b = flat(200, 1);
  b.mean = vec1(2.0);
  auto c = flat(200, 1);
  c.mean = vec1(-1.0);
  auto ds = generate({a, b, c}, seed);
  ds.name = "demo_two_jumps_1d";
  ds.cp_type = ChangeType::jump;
  return ds;
}

void write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir) {
  const auto target = dir / dataset.directory_name();
  std::error_code ec;
  std::filesystem::create_directories(target, ec);
  if (ec) throw InputError("cannot create " + target.string() + ": " + ec.message());
  save_csv(dataset.series, target / "series.csv");
  save_labels(dataset.labels, target / "labels.json");
  write_file_atomic(target / "params.json", dataset.params.dump(2) + "\n");
}

}  // namespace cpdsde::synth
