#include "brwlab/tree.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "brwlab/stats.hpp"

namespace brwlab {

std::pair<double, double> BarrierSpec::allowed(std::int64_t j) const {
    double lo = kNegInf, hi = kPosInf;
    if (lower_L) lo = -*lower_L;
    if (window) {
        const double log_level = 1.5 * std::log(static_cast<double>(horizon));
        const std::int64_t half = horizon / 2;
        if (j == window->k_n) {
            lo = std::max(lo, std::cbrt(static_cast<double>(window->k_n)));
            hi = static_cast<double>(window->k_n);
        } else if (j == horizon) {
            lo = std::max(lo, log_level + window->alpha_minus);
            hi = log_level + window->alpha_plus;
        } else if (j >= half) {
            lo = std::max(lo, log_level);
        }
        return {lo, hi};
    }
    if (second && horizon > 0 && j >= horizon / 2) {
        lo = std::max(lo, 1.5 * std::log(static_cast<double>(horizon)) - second->K);
    }
    return {lo, hi};
}

Population make_root(std::string law_name) {
    Population pop;
    pop.law_name = std::move(law_name);
    GenerationFrame root;
    root.position.push_back(0.0);
    pop.frames.push_back(std::move(root));
    return pop;
}

void grow(Population& pop, const ReproductionLaw& law, const BarrierSpec& barrier, Rng& rng,
          std::size_t max_particles) {
    if (!pop.alive || pop.overflowed) throw std::logic_error("grow: population is not alive");
    const GenerationFrame& cur = pop.frames.back();
    const std::int64_t next_gen = pop.generation() + 1;
    const auto [lo, hi] = barrier.allowed(next_gen);

    GenerationFrame next;
    std::vector<double> kids;
    for (std::size_t p = 0; p < cur.position.size(); ++p) {
        const double base = cur.position[p];
        law.sample(rng, kids);
        for (double d : kids) {
            const double pos = base + d;
            if (pos < lo || pos > hi) continue; // killed, never moved
            next.position.push_back(pos);
            next.parent.push_back(static_cast<std::uint32_t>(p));
            if (next.position.size() > max_particles) {
                pop.overflowed = true;
                return; // abort with partial result flagged; frame dropped
            }
        }
    }
    pop.barrier_log.emplace_back(lo, hi);
    if (next.position.empty()) pop.alive = false;
    pop.frames.push_back(std::move(next));
}

Population grow_tree(const ReproductionLaw& law, std::int64_t n, const BarrierSpec& barrier,
                     Rng& rng, std::size_t max_particles) {
    Population pop = make_root(law.name());
    for (std::int64_t g = 0; g < n && pop.alive && !pop.overflowed; ++g)
        grow(pop, law, barrier, rng, max_particles);
    return pop;
}

std::vector<double> path_minima(const Population& pop) {
    std::vector<double> prev{0.0};
    for (std::size_t g = 1; g < pop.frames.size(); ++g) {
        const GenerationFrame& f = pop.frames[g];
        std::vector<double> cur(f.position.size());
        for (std::size_t i = 0; i < f.position.size(); ++i)
            cur[i] = std::min(prev[f.parent[i]], f.position[i]);
        prev = std::move(cur);
    }
    return prev;
}

MartingaleReadout readout(const Population& pop, double beta, const RenewalTable* renewal,
                          double L) {
    if (pop.frames.empty()) throw std::logic_error("readout: population has no frames");
    MartingaleReadout out;
    const GenerationFrame& last = pop.frames.back();
    out.n_particles = static_cast<std::int64_t>(last.position.size());
    if (last.position.empty()) {
        // extinct: log_W = -inf sentinel, D = 0
        out.min_pos = kPosInf;
        return out;
    }
    StreamingLse lse;
    double d_sum = 0.0;
    double min_pos = kPosInf;
    for (double v : last.position) {
        lse.push(-beta * v);
        d_sum += v * std::exp(-v);
        min_pos = std::min(min_pos, v);
    }
    out.log_W = lse.value();
    out.D = d_sum;
    out.min_pos = min_pos;
    if (renewal) {
        const std::vector<double> minima = path_minima(pop);
        double dl = 0.0;
        for (std::size_t i = 0; i < last.position.size(); ++i) {
            if (minima[i] < -L) continue;
            dl += renewal->value(L + last.position[i]) * std::exp(-last.position[i]);
        }
        out.D_L = dl;
    }
    return out;
}

std::vector<double> path_of(const Population& pop, std::int64_t gen, std::size_t particle_index) {
    if (gen < 0 || gen >= static_cast<std::int64_t>(pop.frames.size()))
        throw std::out_of_range("path_of: generation out of range");
    if (particle_index >= pop.frames[static_cast<std::size_t>(gen)].position.size())
        throw std::out_of_range("path_of: particle index out of range");
    std::vector<double> path(static_cast<std::size_t>(gen) + 1);
    std::size_t idx = particle_index;
    for (std::int64_t g = gen; g >= 0; --g) {
        const GenerationFrame& f = pop.frames[static_cast<std::size_t>(g)];
        path[static_cast<std::size_t>(g)] = f.position[idx];
        if (g > 0) idx = f.parent[idx];
    }
    return path;
}

std::vector<double> path_of(const Population& pop, std::size_t particle_index) {
    return path_of(pop, pop.generation(), particle_index);
}

MinStats min_trajectory_stats(const Population& pop) {
    MinStats out;
    out.global_min = kPosInf;
    out.final_min = kPosInf;
    for (const GenerationFrame& f : pop.frames)
        for (double v : f.position) out.global_min = std::min(out.global_min, v);
    for (double v : pop.frames.back().position) out.final_min = std::min(out.final_min, v);
    return out;
}

// --- snapshot -------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'B', 'R', 'W', 'P', 'O', 'P', '0', '1'};

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
} // namespace

void save_population(const Population& pop, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_population: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t name_len = static_cast<std::uint32_t>(pop.law_name.size());
    write_pod(out, name_len);
    out.write(pop.law_name.data(), name_len);
    const std::uint8_t alive = pop.alive ? 1 : 0;
    const std::uint8_t overflowed = pop.overflowed ? 1 : 0;
    write_pod(out, alive);
    write_pod(out, overflowed);
    const std::uint64_t n_frames = pop.frames.size();
    write_pod(out, n_frames);
    for (const GenerationFrame& f : pop.frames) {
        const std::uint64_t count = f.position.size();
        write_pod(out, count);
        out.write(reinterpret_cast<const char*>(f.position.data()),
                  static_cast<std::streamsize>(count * sizeof(double)));
        const std::uint64_t pcount = f.parent.size();
        write_pod(out, pcount);
        out.write(reinterpret_cast<const char*>(f.parent.data()),
                  static_cast<std::streamsize>(pcount * sizeof(std::uint32_t)));
    }
    const std::uint64_t n_log = pop.barrier_log.size();
    write_pod(out, n_log);
    for (const auto& [lo, hi] : pop.barrier_log) {
        write_pod(out, lo);
        write_pod(out, hi);
    }
}

Population load_population(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_population: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_population: bad magic in " + path);
    Population pop;
    std::uint32_t name_len = 0;
    read_pod(in, name_len);
    pop.law_name.resize(name_len);
    in.read(pop.law_name.data(), name_len);
    std::uint8_t alive = 0, overflowed = 0;
    read_pod(in, alive);
    read_pod(in, overflowed);
    pop.alive = alive != 0;
    pop.overflowed = overflowed != 0;
    std::uint64_t n_frames = 0;
    read_pod(in, n_frames);
    pop.frames.resize(n_frames);
    for (GenerationFrame& f : pop.frames) {
        std::uint64_t count = 0;
        read_pod(in, count);
        f.position.resize(count);
        in.read(reinterpret_cast<char*>(f.position.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        std::uint64_t pcount = 0;
        read_pod(in, pcount);
        f.parent.resize(pcount);
        in.read(reinterpret_cast<char*>(f.parent.data()),
                static_cast<std::streamsize>(pcount * sizeof(std::uint32_t)));
    }
    std::uint64_t n_log = 0;
    read_pod(in, n_log);
    pop.barrier_log.resize(n_log);
    for (auto& [lo, hi] : pop.barrier_log) {
        read_pod(in, lo);
        read_pod(in, hi);
    }
    if (!in) throw std::runtime_error("load_population: truncated file " + path);
    return pop;
}

} // namespace brwlab
