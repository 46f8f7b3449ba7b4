#include "catpaw/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "catpaw/error.hpp"
#include "seeds.hpp"

namespace catpaw {

namespace {


double unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double bin_offset(CategoryBin b) {
  switch (b) {
    case CategoryBin::Small: return 0.06;
    case CategoryBin::Medium: return 0.0;
    case CategoryBin::Large: return -0.06;
  }
  return 0.0;
}

double clip(double v) { return std::clamp(v, 0.05, 0.99); }

}  // namespace

LatentModel::LatentModel(const ColorPool& colors, const ShapeCatalog& shapes,
                         std::uint64_t seed)
    : seed_(seed), nc_(colors.size()), ns_(shapes.size()) {
  color_base_.assign(nc_ * nc_, 0.0);
  for (std::size_t i = 0; i < nc_; ++i) {
    for (std::size_t j = i + 1; j < nc_; ++j) {
      const double de = ciede2000(colors.at(static_cast<int>(i)).lab,
                                  colors.at(static_cast<int>(j)).lab);
      const double v = 0.52 + 0.30 * (1.0 - std::exp(-de / 20.0)) +
                       noise(1, i, j, 0.03);
      color_base_[i * nc_ + j] = color_base_[j * nc_ + i] = v;
    }
  }
  std::vector<double> ex(ns_), ey(ns_);
  for (std::size_t s = 0; s < ns_; ++s) {
    ex[s] = unit(detail::splitmix64(seed_ ^ detail::splitmix64(0x5100 + s)));
    ey[s] = unit(detail::splitmix64(seed_ ^ detail::splitmix64(0x5200 + s)));
  }
  shape_base_.assign(ns_ * ns_, 0.0);
  for (std::size_t i = 0; i < ns_; ++i) {
    for (std::size_t j = i + 1; j < ns_; ++j) {
      const double d = std::min(1.0, std::hypot(ex[i] - ex[j], ey[i] - ey[j]));
      const bool differ = shapes.at(static_cast<int>(i)).fill_class !=
                          shapes.at(static_cast<int>(j)).fill_class;
      const double v = 0.55 + 0.20 * d + (differ ? 0.05 : 0.0) +
                       noise(2, i, j, 0.03);
      shape_base_[i * ns_ + j] = shape_base_[j * ns_ + i] = v;
    }
  }
  for (std::size_t c = 0; c < nc_; ++c) {
    color_quality_.push_back(0.62 + 0.23 * unit(detail::splitmix64(seed_ ^ detail::splitmix64(0x6100 + c))));
  }
  for (std::size_t s = 0; s < ns_; ++s) {
    shape_quality_.push_back(0.62 + 0.23 * unit(detail::splitmix64(seed_ ^ detail::splitmix64(0x6200 + s))));
  }
}

double LatentModel::noise(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          double amplitude) const {
  std::uint64_t h = detail::splitmix64(seed_ ^ detail::splitmix64(a));
  h = detail::splitmix64(h ^ detail::splitmix64(b + 0x1000));
  h = detail::splitmix64(h ^ detail::splitmix64(c + 0x2000000));
  return (2.0 * unit(h) - 1.0) * amplitude;
}

double LatentModel::color_pair(std::size_t i, std::size_t j,
                               CategoryBin bin) const {
  if (i > j) std::swap(i, j);
  return clip(color_base_[i * nc_ + j] + bin_offset(bin) +
              noise(10 + static_cast<int>(bin), i, j, 0.01));
}

double LatentModel::shape_pair(std::size_t i, std::size_t j,
                               CategoryBin bin) const {
  if (i > j) std::swap(i, j);
  return clip(shape_base_[i * ns_ + j] + bin_offset(bin) +
              noise(20 + static_cast<int>(bin), i, j, 0.01));
}

double LatentModel::marker_pair(ColorId c1, ShapeId s1, ColorId c2, ShapeId s2,
                                CategoryBin bin) const {
  std::size_t m1 = static_cast<std::size_t>(c1) * ns_ + static_cast<std::size_t>(s1);
  std::size_t m2 = static_cast<std::size_t>(c2) * ns_ + static_cast<std::size_t>(s2);
  if (m1 > m2) std::swap(m1, m2);
  double v;
  if (c1 == c2) {
    v = shape_base_[static_cast<std::size_t>(s1) * ns_ + static_cast<std::size_t>(s2)];
  } else if (s1 == s2) {
    v = color_base_[static_cast<std::size_t>(c1) * nc_ + static_cast<std::size_t>(c2)];
  } else {
    v = 0.5 * (color_base_[static_cast<std::size_t>(c1) * nc_ + static_cast<std::size_t>(c2)] +
               shape_base_[static_cast<std::size_t>(s1) * ns_ + static_cast<std::size_t>(s2)]) +
        0.04;
  }
  return clip(v + bin_offset(bin) + noise(30 + static_cast<int>(bin), m1, m2, 0.02));
}

double LatentModel::marker(ColorId c, ShapeId s, CategoryBin bin) const {
  const double v = 0.5 * (color_quality_[static_cast<std::size_t>(c)] +
                          shape_quality_[static_cast<std::size_t>(s)]);
  return clip(v + bin_offset(bin) +
              noise(40 + static_cast<int>(bin), static_cast<std::uint64_t>(c),
                    static_cast<std::uint64_t>(s), 0.02));
}

double LatentModel::trial_accuracy(const std::vector<Marker>& cats) const {
  const CategoryBin bin = bin_of(static_cast<int>(cats.size()));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t x = 0; x < cats.size(); ++x) {
    for (std::size_t y = x + 1; y < cats.size(); ++y) {
      const Marker& a = cats[x];
      const Marker& b = cats[y];
      double v;
      if (a.color && a.shape) {
        v = marker_pair(*a.color, *a.shape, *b.color, *b.shape, bin);
      } else if (a.color) {
        v = color_pair(static_cast<std::size_t>(*a.color),
                       static_cast<std::size_t>(*b.color), bin);
      } else {
        v = shape_pair(static_cast<std::size_t>(*a.shape),
                       static_cast<std::size_t>(*b.shape), bin);
      }
      sum += v;
      ++pairs;
    }
  }
  return pairs ? sum / static_cast<double>(pairs) : 1.0;
}

EvidenceSet synthetic_evidence(const ColorPool& colors,
                               const ShapeCatalog& shapes, std::uint64_t seed,
                               std::uint32_t trials_per_cell) {
  if (trials_per_cell == 0) {
    throw Error(ErrorCode::InvalidArgument, "trials_per_cell must be positive",
                "trials_per_cell");
  }
  const LatentModel model(colors, shapes, seed);
  const std::size_t nc = colors.size();
  const std::size_t ns = shapes.size();
  EvidenceSet ev = empty_evidence(nc, ns);
  const double t = static_cast<double>(trials_per_cell);
  const CategoryBin bins[3] = {CategoryBin::Small, CategoryBin::Medium,
                               CategoryBin::Large};
  auto fill = [&](Axis axis, std::size_t n, auto&& acc) {
    PairMatrix& all = ev.matrix(axis, BinSelector::All);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        std::uint32_t all_correct = 0;
        for (CategoryBin b : bins) {
          const auto correct =
              static_cast<std::uint32_t>(std::lround(acc(i, j, b) * t));
          ev.matrix(axis, to_selector(b)).set_counts(i, j, correct, trials_per_cell);
          all_correct += correct;
        }
        all.set_counts(i, j, all_correct, 3 * trials_per_cell);
      }
    }
  };
  fill(Axis::Color, nc, [&](std::size_t i, std::size_t j, CategoryBin b) {
    return model.color_pair(i, j, b);
  });
  fill(Axis::Shape, ns, [&](std::size_t i, std::size_t j, CategoryBin b) {
    return model.shape_pair(i, j, b);
  });
  fill(Axis::Marker, nc * ns, [&](std::size_t i, std::size_t j, CategoryBin b) {
    return model.marker_pair(static_cast<int>(i / ns), static_cast<int>(i % ns),
                             static_cast<int>(j / ns), static_cast<int>(j % ns), b);
  });
  for (std::size_t k = 0; k < nc * ns; ++k) {
    std::uint32_t all_correct = 0;
    for (CategoryBin b : bins) {
      const auto correct = static_cast<std::uint32_t>(std::lround(
          model.marker(static_cast<int>(k / ns), static_cast<int>(k % ns), b) * t));
      auto& table = ev.marker_table(to_selector(b));
      table.correct[k] = correct;
      table.trials[k] = trials_per_cell;
      all_correct += correct;
    }
    auto& all = ev.marker_table(BinSelector::All);
    all.correct[k] = all_correct;
    all.trials[k] = 3 * trials_per_cell;
  }
  return ev;
}

std::vector<TrialRecord> synthetic_trials(const ColorPool& colors,
                                          const ShapeCatalog& shapes,
                                          const SyntheticTrialSpec& spec) {
  std::vector<int> kinds;
  if (spec.color_only) kinds.push_back(0);
  if (spec.shape_only) kinds.push_back(1);
  if (spec.redundant) kinds.push_back(2);
  if (kinds.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no encoding enabled", "encodings");
  }
  if (colors.size() < static_cast<std::size_t>(kMaxCategories) ||
      shapes.size() < static_cast<std::size_t>(kMaxCategories)) {
    throw Error(ErrorCode::InvalidArgument,
                "pools need at least 10 entries for synthetic trials", "pool");
  }
  if (spec.group_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "group_size must be positive",
                "group_size");
  }
  const LatentModel model(colors, shapes, spec.seed);
  std::mt19937_64 rng(detail::splitmix64(spec.seed ^ 0x7472696131ull));
  std::vector<int> color_ids(colors.size()), shape_ids(shapes.size());
  std::iota(color_ids.begin(), color_ids.end(), 0);
  std::iota(shape_ids.begin(), shape_ids.end(), 0);
  std::uniform_int_distribution<int> pick_n(kMinCategories, kMaxCategories);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  std::vector<TrialRecord> out;
  out.reserve(spec.trials);
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const int kind = kinds[t % kinds.size()];
    const int n = pick_n(rng);
    std::shuffle(color_ids.begin(), color_ids.end(), rng);
    std::shuffle(shape_ids.begin(), shape_ids.end(), rng);
    TrialRecord r;
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%06zu", t + 1);
    r.trial_id = buf;
    std::snprintf(buf, sizeof buf, "g%03zu", t / spec.group_size + 1);
    r.group_id = buf;
    r.category_count = n;
    for (int i = 0; i < n; ++i) {
      Marker m;
      if (kind != 1) m.color = color_ids[static_cast<std::size_t>(i)];
      if (kind != 0) m.shape = shape_ids[static_cast<std::size_t>(i)];
      r.categories.push_back(m);
    }
    r.target_index = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const double p = model.trial_accuracy(r.categories);
    const double draw = u(rng);
    const double miss = u(rng);
    if (miss < spec.timeout_rate) {
      r.response_index.reset();
      r.correct = false;
    } else if (draw < p) {
      r.response_index = r.target_index;
      r.correct = true;
    } else {
      int other = std::uniform_int_distribution<int>(0, n - 2)(rng);
      if (other >= r.target_index) ++other;
      r.response_index = other;
      r.correct = false;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace catpaw
