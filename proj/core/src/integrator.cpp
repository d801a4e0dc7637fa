#include "l96/integrator.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace l96 {

std::vector<double> SampleSeries::component(int i) const {
  if (i < 0 || i >= dim) throw DimensionError("SampleSeries::component: index out of range");
  const long long n = count();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) out[k] = data[k * dim + i];
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Vector perturbed_state(int dim, double center, double amplitude, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(-amplitude, amplitude);
  Vector out(dim);
  for (int i = 0; i < dim; ++i) out[i] = center + d(gen);
  return out;
}

void write_series_csv(const SampleSeries& s, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path.string());
  std::fprintf(f, "dim,dt_sample,t_start,count\n");
  std::fprintf(f, "%d,%.17g,%.17g,%lld\n", s.dim, s.dt_sample, s.t_start, s.count());
  std::fprintf(f, "t");
  for (int i = 0; i < s.dim; ++i) std::fprintf(f, ",v%d", i);
  std::fprintf(f, "\n");
  const long long n = s.count();
  for (long long k = 0; k < n; ++k) {
    std::fprintf(f, "%.17g", s.time_at(k));
    const double* row = s.data.data() + k * s.dim;
    for (int i = 0; i < s.dim; ++i) std::fprintf(f, ",%.17g", row[i]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw IoError("write failed: " + path.string());
}

SampleSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim,", 0) != 0)
    throw IoError("bad trajectory header in " + path.string());

  SampleSeries s;
  long long declared = 0;
  if (!std::getline(in, line)) throw IoError("truncated trajectory file " + path.string());
  {
    std::istringstream ls(line);
    char comma;
    if (!(ls >> s.dim >> comma >> s.dt_sample >> comma >> s.t_start >> comma >> declared))
      throw IoError("bad trajectory metadata in " + path.string());
  }
  if (s.dim <= 0) throw IoError("bad dimension in " + path.string());
  std::getline(in, line);  // column names
  s.data.reserve(static_cast<std::size_t>(declared) * s.dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');  // t column, recomputable
    int got = 0;
    while (std::getline(ls, tok, ',')) {
      s.data.push_back(std::strtod(tok.c_str(), nullptr));
      ++got;
    }
    if (got != s.dim) throw IoError("row width mismatch in " + path.string());
  }
  if (s.count() != declared)
    throw IoError("sample count mismatch in " + path.string());
  return s;
}

}  // namespace l96
