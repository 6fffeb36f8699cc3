#include "vcl/sampling.hpp"

#include "vcl/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace vcl {

std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  // 1 - U lies in (0, 1], keeping the logarithm finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  return r * std::cos(t);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) {
    throw InputError("Rng::below: empty range");
  }
  // rejection keeps the result exactly uniform
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) {
    x = engine_();
  }
  return x % n;
}

void shuffle(std::span<int> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

void ParamDistribution::validate() const {
  if (mean.empty()) {
    throw InputError("distribution: mean must have at least one entry");
  }
  for (double m : mean) {
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw InputError("distribution: mean entries must be positive and finite");
    }
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InputError("distribution: sigma must be nonnegative and finite");
  }
  if (s_range && !(s_range->lo > 0.0 && s_range->lo <= s_range->hi && std::isfinite(s_range->hi))) {
    throw InputError("distribution: s_range must satisfy 0 < lo <= hi");
  }
}

std::vector<AlphaParam> sampleAlpha(const ParamDistribution& dist, int count) {
  dist.validate();
  if (count < 0) {
    throw InputError("sampleAlpha: negative count");
  }
  Rng rng(deriveSeed(dist.seed, 0));
  std::vector<AlphaParam> out;
  out.reserve(count);
  std::vector<double> values(dist.mean.size());
  for (int k = 0; k < count; ++k) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      double a = 0.0;
      do {
        a = alphaFromNormal(dist.mean[i], dist.sigma, rng.normal());
      } while (a == 0.0);
      values[i] = a;
    }
    out.emplace_back(values);
  }
  return out;
}

std::vector<ParamSample> sampleAlphaS(const ParamDistribution& dist, int count) {
  if (!dist.s_range) {
    throw InputError("sampleAlphaS: distribution has no s_range");
  }
  const std::vector<AlphaParam> alphas = sampleAlpha(dist, count);
  Rng rng(deriveSeed(dist.seed, 1));
  const double lo = dist.s_range->lo;
  const double hi = dist.s_range->hi;
  std::vector<ParamSample> out;
  out.reserve(count);
  for (const AlphaParam& a : alphas) {
    const double s = lo == hi ? lo : lo + (hi - lo) * rng.uniform();
    out.push_back({a, s});
  }
  return out;
}

std::vector<ParamSample> sampleParams(const ParamDistribution& dist, int count) {
  if (dist.s_range) {
    return sampleAlphaS(dist, count);
  }
  std::vector<ParamSample> out;
  for (AlphaParam& a : sampleAlpha(dist, count)) {
    out.push_back({std::move(a), std::nullopt});
  }
  return out;
}

bool inBoundedDomain(const AlphaParam& alpha, double a, double b) {
  return a <= alpha.min() && alpha.max() <= b;
}

namespace {

std::string formatExact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cells.push_back(cell);
  }
  return cells;
}

double parseNumber(const std::string& text, int line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw InputError("samples csv line " + std::to_string(line_no) + ": bad number '" + text + "'");
  }
  return v;
}

} // namespace

void writeSamplesCsv(std::ostream& out, std::span<const ParamSample> samples) {
  if (samples.empty()) {
    out << "alpha1,alpha2,alpha3,alpha4\n";
    return;
  }
  const int m = samples.front().alpha.size();
  const bool with_s = samples.front().s.has_value();
  for (int i = 0; i < m; ++i) {
    out << (i ? "," : "") << "alpha" << i + 1;
  }
  out << (with_s ? ",s\n" : "\n");
  for (const ParamSample& p : samples) {
    if (p.alpha.size() != m || p.s.has_value() != with_s) {
      throw InputError("writeSamplesCsv: samples have inconsistent shape");
    }
    for (int i = 0; i < m; ++i) {
      out << (i ? "," : "") << formatExact(p.alpha[i]);
    }
    if (with_s) {
      out << ',' << formatExact(*p.s);
    }
    out << '\n';
  }
}

std::vector<ParamSample> readSamplesCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError("samples csv: missing header");
  }
  const std::vector<std::string> header = splitCsv(line);
  int m = 0;
  bool with_s = false;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "alpha" + std::to_string(i + 1)) {
      ++m;
    } else if (header[i] == "s" && i + 1 == header.size() && m > 0) {
      with_s = true;
    } else {
      throw InputError("samples csv: unexpected column '" + header[i] + "'");
    }
  }
  if (m == 0) {
    throw InputError("samples csv: no alpha columns");
  }
  std::vector<ParamSample> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> cells = splitCsv(line);
    if (cells.size() != header.size()) {
      throw InputError("samples csv line " + std::to_string(line_no) + ": wrong number of columns");
    }
    std::vector<double> values(m);
    for (int i = 0; i < m; ++i) {
      values[i] = parseNumber(cells[i], line_no);
    }
    ParamSample p{AlphaParam(values), std::nullopt};
    if (with_s) {
      p.s = parseNumber(cells[m], line_no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

} // namespace vcl
