#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glucoguard/datagen.hpp"

#include <sstream>

using namespace glucoguard;
using namespace glucoguard::datagen;

namespace {

GeneratorConfig small(std::size_t n, std::uint64_t seed = 42, double noise = 0.05) {
    GeneratorConfig c;
    c.n_samples = n;
    c.seed = seed;
    c.label_noise = noise;
    return c;
}

}  // namespace

TEST_CASE("summary statistics match numpy") {
    std::vector<fog::VitalsSample> rows;
    std::uint8_t lbl = 0;
    for (double g : {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0}) {
        fog::VitalsSample s;
        s.glucose = g;
        s.label = lbl ^= 1;
        rows.push_back(s);
    }
    const auto st = summarize(rows);
    const auto& g = *st.feature(fog::ModelFeature::Glucose);
    // numpy: np.percentile(x, [25, 50, 75]); x.mean(); x.std(ddof=1)
    CHECK(g.count == 8);
    CHECK(g.mean == doctest::Approx(3.875).epsilon(1e-15));
    CHECK(g.std == doctest::Approx(2.748376143938713).epsilon(1e-12));
    CHECK(g.min == 1);
    CHECK(g.q25 == doctest::Approx(1.75));
    CHECK(g.q50 == doctest::Approx(3.5));
    CHECK(g.q75 == doctest::Approx(5.25));
    CHECK(g.max == 9);
    CHECK(st.label()->mean == 0.5);

    rows[3].label.reset();
    CHECK_FALSE(summarize(rows).label().has_value());
    CHECK_THROWS_AS(summarize({}), EmptyDataset);
}

TEST_CASE("generation is deterministic per seed") {
    const auto a = generate_dataset(small(500, 7));
    const auto b = generate_dataset(small(500, 7));
    const auto c = generate_dataset(small(500, 8));
    CHECK(a == b);
    CHECK(a != c);
    CHECK(generate_dataset(small(0)).empty());
}

TEST_CASE("values stay inside the reference ranges") {
    for (const auto& s : generate_dataset(small(5000, 3))) {
        CHECK(s.glucose >= 50);
        CHECK(s.glucose <= 250);
        CHECK(s.systolic_bp >= 95);
        CHECK(s.systolic_bp <= 145);
        CHECK(s.heart_rate >= 461);
        CHECK(s.heart_rate <= 769);
        CHECK((s.sweating == 0 || s.sweating == 1));
        CHECK((s.shivering == 0 || s.shivering == 1));
        REQUIRE(s.label.has_value());
    }
}

TEST_CASE("noiseless labels follow the glucose threshold") {
    for (const auto& s : generate_dataset(small(5000, 9, 0.0))) CHECK(*s.label == (s.glucose < 70 ? 1 : 0));
}

TEST_CASE("label noise flips roughly the requested fraction") {
    const auto d = generate_dataset(small(20000, 5, 0.2));
    std::size_t flipped = 0;
    for (const auto& s : d) flipped += *s.label != (s.glucose < 70 ? 1 : 0);
    const double rate = static_cast<double>(flipped) / static_cast<double>(d.size());
    CHECK(rate == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("noise outside [0, 0.5) is rejected") {
    CHECK_THROWS_AS(validate(small(10, 1, 0.5)), InvalidConfig);
    CHECK_THROWS_AS(validate(small(10, 1, 0.7)), InvalidConfig);
    CHECK_THROWS_AS(validate(small(10, 1, -0.1)), InvalidConfig);
    CHECK_NOTHROW(validate(small(10, 1, 0.49)));
}

TEST_CASE("rounding keeps six significant digits") {
    CHECK(round_sig6(123.456789) == 123.457);
    CHECK(round_sig6(0.000123456789) == 0.000123457);
    CHECK(round_sig6(250) == 250);
}

TEST_CASE("csv round trip is lossless") {
    const auto d = generate_dataset(small(300, 11));
    std::stringstream ss;
    write_csv(ss, d);
    const auto back = read_csv(ss);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back[i].features() == d[i].features());
        CHECK(back[i].label == d[i].label);
    }
}

TEST_CASE("malformed csv is rejected") {
    const std::string header = "glucose,systolic_bp,heart_rate,sweating,shivering,hypoglycemia\n";
    for (const std::string& bad : {
             std::string(""),
             std::string("a,b,c\n"),
             header + "1,2,3,4,5\n",
             header + "1,2,3,4,5,6,7\n",
             header + "1,2,x,0,0,1\n",
         }) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_csv(in), std::runtime_error);
    }
    CHECK_THROWS_AS(read_csv(std::filesystem::path("/nonexistent/file.csv")), std::runtime_error);
}

TEST_CASE("summary printout has eight rows") {
    std::ostringstream out;
    print_summary(out, fog::ReferenceStats::reference());
    const auto text = out.str();
    for (const char* row : {"count", "mean", "std", "min", "25%", "50%", "75%", "max"})
        CHECK(text.find(row) != std::string::npos);
    CHECK(text.find("16969") != std::string::npos);
}
