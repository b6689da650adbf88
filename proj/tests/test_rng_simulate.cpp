#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "sdmaf/simulate.hpp"
#include "sdmaf/stats.hpp"
#include "support/temp_files.hpp"

using namespace sdmaf;

TEST_CASE("generator matches the published reference sequence") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xe220a8397b1dcdafull);
    CHECK(rng.next() == 0x6e789e6aa1b965f4ull);
    CHECK(rng.next() == 0x06c45d188009454full);
    CHECK(rng.next() == 0xf88bb8a8724c81ecull);

    SplitMix64 rng2(1234567);
    CHECK(rng2.next() == 0x599ed017fb08fc85ull);
    CHECK(rng2.next() == 0x2c73f08458540fa5ull);

    SplitMix64 rng3(0);
    CHECK(rng3.next_double() == 0.8833108082136426);

    // independent streams are keyed, not consumed in sequence
    CHECK(stream_key(42, 7, 0x5d3a) == 0x93834d3741ed7bbdull);
    CHECK(stream_key(42, 8, 0x5d3a) == 0x962acc7dba2fd63aull);
    CHECK(stream_key(43, 7, 0x5d3a) == 0x23e58eb63e6eabf2ull);
}

TEST_CASE("binomial sampling") {
    SplitMix64 rng(2024);

    SECTION("edge cases and validation") {
        CHECK(binomial_draw(0, 0.3, rng) == 0);
        CHECK(binomial_draw(100, 0.0, rng) == 0);
        CHECK(binomial_draw(100, 1.0, rng) == 100);
        CHECK_THROWS_AS(binomial_draw(-1, 0.3, rng), Error);
        CHECK_THROWS_AS(binomial_draw(10, -0.1, rng), Error);
        CHECK_THROWS_AS(binomial_draw(10, 1.5, rng), Error);
        CHECK_THROWS_AS(binomial_draw(10, std::nan(""), rng), Error);
    }

    SECTION("moments at moderate size") {
        const int reps = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < reps; ++i) {
            const auto k = static_cast<double>(binomial_draw(100, 0.3, rng));
            REQUIRE(k >= 0.0);
            REQUIRE(k <= 100.0);
            sum += k;
            sumsq += k * k;
        }
        const double mean = sum / reps;
        const double var = sumsq / reps - mean * mean;
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(30.0, 0.05));
        CHECK_THAT(var, Catch::Matchers::WithinAbs(21.0, 0.5));
    }

    SECTION("trial counts beyond the inversion's floating-point range") {
        // q^n underflows here; the draw must still have the right moments
        const std::int64_t n = 1000000;
        const double p = 0.001;
        const int reps = 10000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < reps; ++i) {
            const auto k = static_cast<double>(binomial_draw(n, p, rng));
            sum += k;
            sumsq += k * k;
        }
        const double mean = sum / reps;
        const double var = sumsq / reps - mean * mean;
        CHECK_THAT(mean, Catch::Matchers::WithinAbs(1000.0, 1.0));
        CHECK_THAT(var, Catch::Matchers::WithinRel(999.0, 0.05));
    }

    SECTION("large p mirrors") {
        const std::int64_t n = 1000000;
        double sum = 0.0;
        const int reps = 2000;
        for (int i = 0; i < reps; ++i)
            sum += static_cast<double>(binomial_draw(n, 0.999, rng));
        CHECK_THAT(sum / reps, Catch::Matchers::WithinAbs(999000.0, 2.5));
    }
}

TEST_CASE("multinomial sampling") {
    SplitMix64 rng(7);

    SECTION("validation") {
        const double bad_sum[] = {0.5, 0.4};
        CHECK_THROWS_AS(multinomial_draw(10, bad_sum, rng), Error);
        const double neg[] = {1.2, -0.2};
        CHECK_THROWS_AS(multinomial_draw(10, neg, rng), Error);
        CHECK_THROWS_AS(multinomial_draw(10, std::span<const double>{}, rng), Error);
    }

    SECTION("counts always sum to the trial count") {
        const double probs[] = {0.2, 0.3, 0.5};
        for (int i = 0; i < 1000; ++i) {
            const auto c = multinomial_draw(57, probs, rng);
            REQUIRE(c.size() == 3);
            REQUIRE(c[0] + c[1] + c[2] == 57);
            REQUIRE(c[0] >= 0);
            REQUIRE(c[1] >= 0);
            REQUIRE(c[2] >= 0);
        }
    }

    SECTION("marginal frequencies") {
        const double probs[] = {0.2, 0.3, 0.5};
        std::int64_t totals[3] = {0, 0, 0};
        const int reps = 1000;
        const std::int64_t n = 1000;
        for (int i = 0; i < reps; ++i) {
            const auto c = multinomial_draw(n, probs, rng);
            for (int j = 0; j < 3; ++j) totals[j] += c[j];
        }
        const double denom = static_cast<double>(reps) * static_cast<double>(n);
        CHECK_THAT(totals[0] / denom, Catch::Matchers::WithinAbs(0.2, 0.002));
        CHECK_THAT(totals[1] / denom, Catch::Matchers::WithinAbs(0.3, 0.002));
        CHECK_THAT(totals[2] / denom, Catch::Matchers::WithinAbs(0.5, 0.002));
    }

    SECTION("degenerate cell probabilities") {
        const double probs[] = {1.0, 0.0, 0.0};
        const auto c = multinomial_draw(40, probs, rng);
        CHECK(c == std::vector<std::int64_t>{40, 0, 0});
    }
}

TEST_CASE("null simulation is deterministic and order-free") {
    NullSpec spec;
    spec.protocol = NullProtocol::MultiPop;
    spec.sizes = {{"P1", 200, 180}, {"P2", 150, 160}};
    spec.seed = 99;

    const auto src = synthetic_source(spec.protocol, spec.seed, 5, RegionClass::Autosomal, 2);

    const auto a = simulate_variant(spec, src, 5);
    // interleave unrelated draws; variant 5 must not notice
    for (std::uint64_t i = 0; i < 4; ++i)
        simulate_variant(spec, synthetic_source(spec.protocol, spec.seed, i,
                                                RegionClass::Autosomal, 2), i);
    const auto b = simulate_variant(spec, src, 5);

    REQUIRE(a.strata.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.strata[k].female == b.strata[k].female);
        CHECK(std::get<DiploidCounts>(a.strata[k].male) ==
              std::get<DiploidCounts>(b.strata[k].male));
        CHECK(a.strata[k].female.total() == 200 - 50 * static_cast<std::int64_t>(k));
    }
    CHECK(a.id == b.id);
    CHECK(a.pos == 6);

    // a different index gives different draws (up to astronomical luck)
    const auto c = simulate_variant(spec, src, 6);
    CHECK((c.strata[0].female == a.strata[0].female &&
           c.strata[1].female == a.strata[1].female) == false);
}

TEST_CASE("null simulation validates its inputs") {
    NullSpec spec;
    spec.sizes = {{"P1", 100, 100}};
    VariantSource src;
    src.pops.resize(2);  // mismatched population count
    CHECK_THROWS_AS(simulate_variant(spec, src, 0), Error);

    NullSpec empty;
    CHECK_THROWS_AS(simulate_variant(empty, src, 0), Error);

    // genotype frequencies must be a distribution
    NullSpec one;
    one.sizes = {{"P1", 100, 100}};
    VariantSource bad;
    bad.pops.resize(1);
    bad.pops[0].female = DiploidFreqs{0.5, 0.4, 0.2};
    CHECK_THROWS_AS(simulate_variant(one, bad, 0), Error);
}

TEST_CASE("fixed source frequencies give degenerate, well-defined counts") {
    NullSpec spec;
    spec.sizes = {{"P1", 120, 80}};
    spec.seed = 5;
    VariantSource src;
    src.pops.resize(1);
    src.pops[0].female = DiploidFreqs{1.0, 0.0, 0.0};  // fixed for the major allele
    const auto rec = simulate_variant(spec, src, 0);
    CHECK(rec.strata[0].female == DiploidCounts{120, 0, 0});
    CHECK(std::get<DiploidCounts>(rec.strata[0].male) == DiploidCounts{80, 0, 0});
    const auto t = sdmaf_single(rec.strata[0], RegionClass::Autosomal);
    REQUIRE(t.has_value());
    CHECK(t->statistic == 0.0);
    CHECK(t->p_value == 1.0);
}

TEST_CASE("hemizygous simulation draws haploid males") {
    NullSpec spec;
    spec.protocol = NullProtocol::MultiPop;
    spec.sizes = {{"P1", 300, 250}, {"P2", 200, 220}};
    spec.seed = 17;
    const auto src = synthetic_source(spec.protocol, spec.seed, 0, RegionClass::XNpr, 2);
    const auto rec = simulate_variant(spec, src, 0);
    CHECK(rec.region == RegionClass::XNpr);
    const auto& m0 = std::get<HaploidCounts>(rec.strata[0].male);
    CHECK(m0.total() == 250);
    const auto& m1 = std::get<HaploidCounts>(rec.strata[1].male);
    CHECK(m1.total() == 220);
}

TEST_CASE("the stratified statistic is calibrated under its null") {
    // mean of a chi-square with K degrees of freedom is K
    NullSpec spec;
    spec.protocol = NullProtocol::MultiPop;
    spec.sizes = {{"P1", 400, 380}, {"P2", 350, 360}};
    spec.seed = 31;
    const int reps = 2000;
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < reps; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const auto src =
            synthetic_source(spec.protocol, spec.seed, idx, RegionClass::Autosomal, 2);
        const auto rec = simulate_variant(spec, src, idx);
        const auto t = sdmaf_multi(rec.strata, RegionClass::Autosomal);
        if (!t.has_value()) continue;
        sum += t->statistic;
        ++used;
    }
    REQUIRE(used > reps * 99 / 100);
    CHECK_THAT(sum / used, Catch::Matchers::WithinAbs(2.0, 0.15));
}

TEST_CASE("the heterogeneity statistic is calibrated under the shared-difference null") {
    NullSpec spec;
    spec.protocol = NullProtocol::BetweenPop;
    spec.sizes = {{"P1", 400, 380}, {"P2", 350, 360}, {"P3", 300, 320}};
    spec.seed = 47;
    const int reps = 2000;
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < reps; ++i) {
        const auto idx = static_cast<std::uint64_t>(i);
        const auto src =
            synthetic_source(spec.protocol, spec.seed, idx, RegionClass::Autosomal, 3);
        const auto rec = simulate_variant(spec, src, idx);
        const auto o = sdmaf_omnibus_diff(rec.strata, RegionClass::Autosomal);
        if (!o.test.has_value() || o.populations_excluded > 0) continue;
        sum += o.test->statistic;
        ++used;
    }
    REQUIRE(used > reps * 95 / 100);
    // mean of a chi-square with K-1 = 2 degrees of freedom
    CHECK_THAT(sum / used, Catch::Matchers::WithinAbs(2.0, 0.15));
}

TEST_CASE("synthetic sources are deterministic and respect their options") {
    const auto a = synthetic_source(NullProtocol::MultiPop, 11, 3, RegionClass::Autosomal, 3);
    const auto b = synthetic_source(NullProtocol::MultiPop, 11, 3, RegionClass::Autosomal, 3);
    REQUIRE(a.pops.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.pops[k].female.bb == b.pops[k].female.bb);
        CHECK(a.pops[k].female.het == b.pops[k].female.het);
        CHECK(a.pops[k].female.BB == b.pops[k].female.BB);
    }

    SyntheticOptions narrow;
    narrow.maf_lo = 0.2;
    narrow.maf_hi = 0.3;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto s =
            synthetic_source(NullProtocol::MultiPop, 1, i, RegionClass::Autosomal, 2, narrow);
        for (const auto& pop : s.pops) {
            const double maf = pop.female.minor_allele_freq();
            REQUIRE(maf >= 0.2 - 1e-12);
            REQUIRE(maf <= 0.3 + 1e-12);
            // no departure requested: heterozygosity is exactly 2p(1-p)
            REQUIRE_THAT(pop.female.het,
                         Catch::Matchers::WithinRel(2.0 * maf * (1.0 - maf), 1e-12));
        }
    }

    // shared-difference sources use one frequency pair for all populations
    const auto shared =
        synthetic_source(NullProtocol::BetweenPop, 2, 0, RegionClass::Autosomal, 4);
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(shared.pops[k].female.het == shared.pops[0].female.het);
        CHECK(shared.pops[k].male.het == shared.pops[0].male.het);
    }

    SyntheticOptions bad;
    bad.maf_hi = 0.6;
    CHECK_THROWS_AS(
        synthetic_source(NullProtocol::MultiPop, 1, 0, RegionClass::Autosomal, 2, bad), Error);
    SyntheticOptions bad2;
    bad2.hwd_fraction = 1.5;
    CHECK_THROWS_AS(
        synthetic_source(NullProtocol::MultiPop, 1, 0, RegionClass::Autosomal, 2, bad2), Error);
    CHECK_THROWS_AS(synthetic_source(NullProtocol::MultiPop, 1, 0, RegionClass::Autosomal, 0),
                    Error);
}

TEST_CASE("departure option moves genotypes away from independence") {
    SyntheticOptions opt;
    opt.hwd_fraction = 1.0;
    bool saw_departure = false;
    for (std::uint64_t i = 0; i < 50 && !saw_departure; ++i) {
        const auto s =
            synthetic_source(NullProtocol::MultiPop, 9, i, RegionClass::Autosomal, 1, opt);
        const double maf = s.pops[0].female.minor_allele_freq();
        const double expect_het = 2.0 * maf * (1.0 - maf);
        if (std::fabs(s.pops[0].female.het - expect_het) > 1e-3) saw_departure = true;
    }
    CHECK(saw_departure);
}

TEST_CASE("frequency tables round-trip") {
    testgen::TempDir tmp;

    SECTION("well-formed table") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tautosomal\tP1\t0.36\t0.48\t0.16\t0.49\t0.42\t0.09\n"
            "v1\tautosomal\tP2\t0.25\t0.5\t0.25\t0.25\t0.5\t0.25\n"
            "v2\tnpr\tP1\t0.36\t0.48\t0.16\t0.7\tNA\t0.3\n"
            "v2\tnpr\tP2\t0.49\t0.42\t0.09\t0.6\tNA\t0.4\n");
        const auto table = load_frequency_table(path);
        REQUIRE(table.populations == std::vector<std::string>{"P1", "P2"});
        REQUIRE(table.variants.size() == 2);
        CHECK(table.variants[0].id == "v1");
        CHECK(table.variants[0].region == RegionClass::Autosomal);
        CHECK_THAT(table.variants[0].pops[0].female.het,
                   Catch::Matchers::WithinRel(0.48, 1e-12));
        CHECK_THAT(table.variants[0].pops[1].male.BB,
                   Catch::Matchers::WithinRel(0.25, 1e-12));
        CHECK(table.variants[1].region == RegionClass::XNpr);
        CHECK_THAT(table.variants[1].pops[0].male_allele,
                   Catch::Matchers::WithinRel(0.3, 1e-12));
        CHECK_THAT(table.variants[1].pops[1].male_allele,
                   Catch::Matchers::WithinRel(0.4, 1e-12));
    }

    SECTION("NA female frequencies drop the variant with a note") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tautosomal\tP1\tNA\tNA\tNA\t0.49\t0.42\t0.09\n"
            "v2\tautosomal\tP1\t0.25\t0.5\t0.25\t0.25\t0.5\t0.25\n");
        std::vector<std::string> skipped;
        const auto table = load_frequency_table(path, &skipped);
        REQUIRE(table.variants.size() == 1);
        CHECK(table.variants[0].id == "v2");
        REQUIRE(skipped.size() == 1);
        CHECK(skipped[0] == "v1");
    }

    SECTION("small rounding residues are renormalized") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tautosomal\tP1\t0.3600001\t0.48\t0.16\t0.49\t0.42\t0.09\n");
        const auto table = load_frequency_table(path);
        const auto& f = table.variants[0].pops[0].female;
        CHECK_THAT(f.bb + f.het + f.BB, Catch::Matchers::WithinRel(1.0, 1e-15));
    }

    SECTION("frequencies far from a distribution are an error") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tautosomal\tP1\t0.9\t0.48\t0.16\t0.49\t0.42\t0.09\n");
        CHECK_THROWS_AS(load_frequency_table(path), InputError);
    }

    SECTION("inconsistent population lists are an error") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tautosomal\tP1\t0.25\t0.5\t0.25\t0.25\t0.5\t0.25\n"
            "v2\tautosomal\tP2\t0.25\t0.5\t0.25\t0.25\t0.5\t0.25\n");
        CHECK_THROWS_AS(load_frequency_table(path), InputError);
    }

    SECTION("unknown region label is an error") {
        const auto path = tmp.write(
            "f.tsv",
            "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\t"
            "male_bb\tmale_bB\tmale_BB\n"
            "v1\tchr7\tP1\t0.25\t0.5\t0.25\t0.25\t0.5\t0.25\n");
        CHECK_THROWS_AS(load_frequency_table(path), InputError);
    }

    SECTION("wrong header is an error") {
        const auto path = tmp.write("f.tsv", "a\tb\nc\td\n");
        CHECK_THROWS_AS(load_frequency_table(path), InputError);
    }
}
