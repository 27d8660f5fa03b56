#include <catch2/catch_amalgamated.hpp>

#include "subx/challenge_response.hpp"

#include "support/generators.hpp"

using namespace subx;

TEST_CASE("respond is exactly row membership", "[cr]") {
    const int n = 6, ell = 6;
    const auto se = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 3), n);
    // exhaustive over all pairs at n=6
    for (std::uint64_t xv = 0; xv < 64; ++xv)
        for (std::uint64_t yv = 0; yv < 64; ++yv) {
            const BitString x = BitString::from_uint(xv, n), y = BitString::from_uint(yv, n);
            const auto rows = se->rows(x, y);
            REQUIRE(respond(x, y, rows[0], *se) == ResponseVerdict::Fixed);
            if ((xv + yv) % 7 == 0) {  // denser membership sweep on a subgrid
                for (const auto& r : rows)
                    REQUIRE(respond(x, y, r, *se) == ResponseVerdict::Fixed);
                for (std::uint64_t c = 0; c < 64; ++c) {
                    const BitString ch = BitString::from_uint(c, ell);
                    const bool member = std::find(rows.begin(), rows.end(), ch) != rows.end();
                    REQUIRE((respond(x, y, ch, *se) == ResponseVerdict::Fixed) == member);
                }
            }
        }
    REQUIRE_THROWS(respond(BitString::zeros(n), BitString::zeros(n), BitString::zeros(ell + 1), *se));
}

TEST_CASE("all-zero double rows never match a ones challenge", "[cr]") {
    const int n = 4, ell = 3;
    const auto base = std::make_shared<RotationSE>(std::make_shared<IpExtractor>(n, n, ell), n);
    std::vector<std::pair<int, BitString>> inj;
    for (int i = 0; i < n; ++i) inj.emplace_back(i, BitString::zeros(ell));
    const InjectedSE zeroed(base, std::move(inj));
    SplitRng rng(71);
    for (int rep = 0; rep < 32; ++rep) {
        const BitString x = rng.next_bits(n), y = rng.next_bits(n);
        REQUIRE(respond(x, y, BitString::ones(ell), zeroed) == ResponseVerdict::HasEnt);
        REQUIRE(respond(x, y, BitString::zeros(ell), zeroed) == ResponseVerdict::Fixed);
    }
}

TEST_CASE("uniform independent challenges are rarely responded", "[cr][statistical]") {
    // Pr[Fixed] <= r * 2^-ell, checked within three binomial sigmas
    const int n = 16, ell = 8, r = 16;
    const auto se = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 9), r);
    SplitRng rng(0xC0FFEE);
    const int trials = 20000;
    int fixed = 0;
    for (int t = 0; t < trials; ++t) {
        const BitString x = rng.next_bits(n), y = rng.next_bits(n);
        const BitString ch = rng.next_bits(ell);
        if (respond(x, y, ch, *se) == ResponseVerdict::Fixed) ++fixed;
    }
    const double p0 = r * std::exp2(-ell);
    const double sigma = std::sqrt(p0 * (1 - p0) / trials);
    REQUIRE(static_cast<double>(fixed) / trials <= p0 + 3 * sigma);
}

TEST_CASE("adding rows can only move verdicts toward Fixed", "[cr][property]") {
    const int n = 6, ell = 4;
    const auto base = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 5), n);
    SplitRng rng(81);
    const auto extended = InjectedSE::appending(
        base, {rng.next_bits(ell), rng.next_bits(ell), rng.next_bits(ell)});
    int flipped = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const BitString x = rng.next_bits(n), y = rng.next_bits(n), ch = rng.next_bits(ell);
        const auto before = respond(x, y, ch, *base);
        const auto after = respond(x, y, ch, *extended);
        if (before == ResponseVerdict::Fixed) REQUIRE(after == ResponseVerdict::Fixed);
        if (before != after) ++flipped;
    }
    REQUIRE(flipped > 0);  // the coupling is not vacuous at these widths
}

TEST_CASE("fixed branch with an injected double needs no conditioning", "[cr]") {
    const int n = 6, ell = 4;
    SplitRng rng(91);
    const auto X = testgen::random_flat(rng, n, 8);
    const auto Y = testgen::random_flat(rng, n, 8);
    const BitString a = BitString::from_string("1011");
    const auto base = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 7), n);
    const auto dbl = std::make_shared<InjectedSE>(
        base, std::vector<std::pair<int, BitString>>{{2, a}});

    const auto rep = branch_fixed_test(
        X, Y, [&](const BitString&, const BitString&) { return a; }, dbl);
    REQUIRE(rep.found);
    REQUIRE(rep.strategy == "injection");
    REQUIRE(rep.verified);
    REQUIRE(rep.deficiency_ok);
    REQUIRE(rep.witness_x->deficiency() == Catch::Approx(0.0));
    REQUIRE(rep.witness_y->deficiency() == Catch::Approx(0.0));

    // non-constant challenges are rejected
    REQUIRE_THROWS(branch_fixed_test(
        X, Y, [](const BitString& x, const BitString&) { return x.slice(0, 4); }, dbl));
}

TEST_CASE("fixed branch search against the reference rows", "[cr]") {
    const int n = 4, ell = 2;
    // 0000 zeroes every rotation row, so a product witness exists for 00
    const auto X = ExplicitSource::flat({BitString::from_string("0000"),
                                         BitString::from_string("0110"),
                                         BitString::from_string("1110")});
    const auto Y = ExplicitSource::flat({BitString::from_string("0011"),
                                         BitString::from_string("0101"),
                                         BitString::from_string("1001")});
    const auto se = std::make_shared<RotationSE>(std::make_shared<IpExtractor>(n, n, ell), n);
    const BitString zz = BitString::zeros(ell);
    const auto rep = branch_fixed_test(
        X, Y, [&](const BitString&, const BitString&) { return zz; }, se);
    REQUIRE(rep.found);
    REQUIRE(rep.strategy == "search");
    REQUIRE(rep.verified);
    const auto wx = rep.witness_x->materialize();
    const auto wy = rep.witness_y->materialize();
    for (const auto& [x, px] : wx.atoms())
        for (const auto& [y, py] : wy.atoms())
            REQUIRE(se->rows(x, y)[rep.row_index] == zz);

    // an unreachable constant is reported inconclusive, not failed
    const auto wide = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, 8, 0x77), n);
    const BitString far = BitString::from_string("11111111");
    const auto miss = branch_fixed_test(
        X, Y, [&](const BitString&, const BitString&) { return far; }, wide);
    REQUIRE(miss.inconclusive);
    REQUIRE(!miss.found);
}

TEST_CASE("oversized supports refuse the exhaustive search", "[cr]") {
    const int n = 6, ell = 4;
    SplitRng rng(101);
    const auto X = testgen::random_flat(rng, n, 32);  // above the 16-row cap
    const auto Y = testgen::random_flat(rng, n, 8);
    const auto se = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 7), n);
    const BitString a = BitString::from_string("0110");
    const auto rep = branch_fixed_test(
        X, Y, [&](const BitString&, const BitString&) { return a; }, se);
    REQUIRE(rep.inconclusive);
    REQUIRE(!rep.found);
}

TEST_CASE("entropy branch with fresh uniform challenges", "[cr][statistical]") {
    const int n = 8, ell = 8, r = 8;
    const auto X = ExplicitSource::uniform(n), Y = ExplicitSource::uniform(n);
    const auto se = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 2), r);
    const auto rep = branch_entropy_test(X, Y, ChallengeSpec::fresh_uniform(ell), *se, 8.0, 20000,
                                         2.0, SplitRng(0xC0FFEE));
    // Pr[Fixed] ~ r * 2^-ell
    const double p0 = r * std::exp2(-ell);
    REQUIRE(rep.pr_fixed <= p0 + 3 * std::sqrt(p0 * (1 - p0) / rep.trials));
    REQUIRE(rep.pass);
    REQUIRE(rep.spot_max_distance == 0.0);  // uniform ell bits at k = ell
}

TEST_CASE("entropy branch flags a constant challenge", "[cr]") {
    const int n = 8, ell = 4;
    const auto X = ExplicitSource::uniform(n), Y = ExplicitSource::uniform(n);
    const BitString c = BitString::from_string("1100");
    const auto base = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, ell, 4), 8);
    const auto dbl = std::make_shared<InjectedSE>(
        base, std::vector<std::pair<int, BitString>>{{0, c}});
    const auto rep = branch_entropy_test(
        X, Y, ChallengeSpec::deterministic([&](const BitString&, const BitString&) { return c; }),
        *dbl, 4.0, 2000, 1.5, SplitRng(1));
    REQUIRE(rep.pr_fixed == 1.0);
    REQUIRE(!rep.pass);
    REQUIRE(rep.spot_max_distance > 0.9);  // a point challenge is far from min-entropy 4
}

TEST_CASE("entropy branch on the inner-product challenge", "[cr][pinned]") {
    const int n = 8;
    const auto X = ExplicitSource::uniform(n), Y = ExplicitSource::uniform(n);
    const auto se = std::make_shared<RotationSE>(std::make_shared<TableExtractor>(n, n, 4, 0x5E), 8);
    const auto rep = branch_entropy_test(
        X, Y,
        ChallengeSpec::deterministic(
            [](const BitString& x, const BitString& y) { return ip_extract(x, y, 4); }),
        *se, 4.0, 20000, 1.5, SplitRng(0xC0FFEE));
    REQUIRE(rep.pr_fixed == Catch::Approx(0.3888).margin(1e-9));  // pinned, seed 0xC0FFEE
    REQUIRE(rep.pass);
    REQUIRE(rep.ci_hi <= rep.bound);
    REQUIRE(rep.spot_max_distance <= 0.05);
}
