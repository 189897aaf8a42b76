// Compares the serial reference path (threads = 1) against the OpenMP path
// for the replicate-parallel kernels, and checks that both produce identical
// results (the reductions are chunk-deterministic by construction).

#include <chrono>
#include <cstdio>
#include <cstring>

#include "brwlab/experiments.hpp"
#include "brwlab/parallel.hpp"

using namespace brwlab;

namespace {

struct BenchResult {
    double seconds = 0.0;
    double value = 0.0;
};

template <class F>
BenchResult timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const double v = f();
    const auto t1 = std::chrono::steady_clock::now();
    return {std::chrono::duration<double>(t1 - t0).count(), v};
}

void report(const char* name, const BenchResult& serial, const BenchResult& parallel,
            int threads) {
    const bool same = std::memcmp(&serial.value, &parallel.value, sizeof(double)) == 0;
    std::printf("%-28s serial %8.3fs   omp(%d) %8.3fs   speedup %.2fx   identical %s\n", name,
                serial.seconds, threads, parallel.seconds, serial.seconds / parallel.seconds,
                same ? "yes" : "NO");
}

} // namespace

int main(int argc, char** argv) {
    const int threads = hardware_threads();
    const std::int64_t scale = argc > 1 ? std::atoll(argv[1]) : 1;
    std::printf("hardware threads: %d, scale: %lld\n", threads,
                static_cast<long long>(scale));

    const ReproductionLaw law = ReproductionLaw::gaussian_dyadic();
    const WalkLaw walk = WalkLaw::from_reproduction(law);

    // kernel 1: barrier survival over killed walk replicates
    {
        auto run = [&](int t) {
            return survival_probability(walk, 2.0, 4096, 400000 * scale, 99, t).value;
        };
        const BenchResult s = timed([&] { return run(1); });
        const BenchResult p = timed([&] { return run(threads); });
        report("survival_probability", s, p, threads);
    }

    // kernel 2: spine-walk partition estimator
    {
        auto run = [&](int t) {
            return spine_W_estimator(law, 1.0 + 1.0 / 64.0, 4096, nullptr, 5.0,
                                     200000 * scale, 16, 100, t)
                .est.value;
        };
        const BenchResult s = timed([&] { return run(1); });
        const BenchResult p = timed([&] { return run(threads); });
        report("spine_W_estimator", s, p, threads);
    }

    // kernel 3: tree replicates with Gibbs readouts
    {
        RegimeSpec spec;
        spec.regime = Regime::BelowWeak;
        spec.schedule = Schedule::power(0.45);
        spec.n_list = {12};
        auto run = [&](int t) {
            Budget b;
            b.n_trees = 800 * scale;
            b.threads = t;
            b.seed = 101;
            b.spine_n_list = {};
            return run_partition_scaling(law, spec, b)[0].rows[0].value;
        };
        const BenchResult s = timed([&] { return run(1); });
        const BenchResult p = timed([&] { return run(threads); });
        report("tree_partition_scaling", s, p, threads);
    }

    // kernel 4: continuum excursion reference sampler
    {
        auto run = [&](int t) {
            return excursion_targets({battery::sup()}, 256, 100000 * scale, 102, t)[0];
        };
        const BenchResult s = timed([&] { return run(1); });
        const BenchResult p = timed([&] { return run(threads); });
        report("excursion_targets", s, p, threads);
    }
    return 0;
}
