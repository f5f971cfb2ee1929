#include <catch_amalgamated.hpp>

#include <qdrive/cascade.hpp>
#include <qdrive/devices.hpp>
#include <qdrive/network.hpp>

using namespace qdrive;
using Catch::Approx;

namespace {

const double quarter_5ghz = constants::c / (5e9 * std::sqrt(6.45)) / 4.0;

double s21_db(const Netlist& n, double f) { return 20.0 * std::log10(std::abs(s_matrix(n, f)(1, 0))); }

double t1_at(const Netlist& n, double f, double c_q) {
    return c_q / driving_point_admittance(n, 2, all_matched(n, 2), f).real();
}

} // namespace

TEST_CASE("zero-length line is the identity", "[network][tline]") {
    auto m = tline_two_port(50, 6.45, 0.0, 0.0, 5e9);
    CHECK(std::abs(m(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(m(0, 1)) < 1e-15);
    CHECK(std::abs(m(1, 0)) < 1e-15);
    CHECK(std::abs(m(1, 1) - 1.0) < 1e-15);
}

TEST_CASE("quarter-wave line entries", "[network][tline]") {
    auto m = tline_two_port(50, 6.45, quarter_5ghz, 0.0, 5e9);
    CHECK(std::abs(m(0, 0)) < 1e-9);
    CHECK(std::abs(m(1, 1)) < 1e-9);
    CHECK(std::abs(m(0, 1) - cplx(0, 50)) < 1e-9);
    CHECK(std::abs(m(1, 0) - cplx(0, 0.02)) < 1e-9);
}

TEST_CASE("eighth-wave line entries", "[network][tline]") {
    auto m = tline_two_port(50, 6.45, quarter_5ghz / 2, 0.0, 5e9);
    CHECK(m(0, 0).real() == Approx(0.70710678118654752).epsilon(1e-12));
    CHECK(m(0, 1).imag() == Approx(35.355339059327376).epsilon(1e-12));
    CHECK(m(1, 0).imag() == Approx(0.014142135623730951).epsilon(1e-12));
}

TEST_CASE("lossy line keeps unit determinant", "[network][tline]") {
    for (double att : {0.0, 1.0, 100.0, 1e4}) {
        auto m = tline_two_port(37.0, 9.0, 0.013, att, 7.3e9);
        const double scale = std::max(1.0, std::abs(m(0, 0) * m(1, 1)));
        CHECK(std::abs(m.determinant() - 1.0) < 1e-12 * scale);
    }
}

TEST_CASE("extreme loss overflows into a numeric-range error", "[network][tline]") {
    try {
        tline_two_port(50, 6.45, 10.0, 1e6, 5e9);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::numeric_range);
    }
}

TEST_CASE("single shunt capacitor stamp", "[network][mna]") {
    Netlist n;
    n.ground("0").capacitor("n1", "0", 1e-12);
    auto y = assemble_admittance_matrix(n, 1e9);
    REQUIRE(y.y.rows() == 1);
    CHECK(y.y(0, 0).real() == 0.0);
    CHECK(y.y(0, 0).imag() == Approx(6.283185307179586e-3).epsilon(1e-14));
}

TEST_CASE("series capacitor stamp symmetry", "[network][mna]") {
    Netlist n;
    n.ground("0").capacitor("n1", "n2", 1e-12).capacitor("n2", "0", 1e-12);
    auto y = assemble_admittance_matrix(n, 1e9);
    const int a = y.index.at("n1"), b = y.index.at("n2");
    const cplx yc(0, 6.283185307179586e-3);
    CHECK(std::abs(y.y(a, a) - yc) < 1e-15);
    CHECK(std::abs(y.y(a, b) + yc) < 1e-15);
    CHECK(std::abs(y.y(b, a) + yc) < 1e-15);
}

TEST_CASE("eighth-wave line admittance stamp", "[network][mna]") {
    Netlist n;
    n.ground("0").tline("n1", "n2", {50, 6.45, quarter_5ghz / 2, 0});
    auto y = assemble_admittance_matrix(n, 5e9);
    const int a = y.index.at("n1"), b = y.index.at("n2");
    CHECK(std::abs(y.y(a, a) - cplx(0, -0.02)) < 1e-12);
    CHECK(std::abs(y.y(b, b) - cplx(0, -0.02)) < 1e-12);
    CHECK(std::abs(y.y(a, b) - cplx(0, 0.028284271247461901)) < 1e-12);
    CHECK_FALSE(y.shifted);
}

TEST_CASE("evaluation on a line pole is shifted and flagged", "[network][mna]") {
    Netlist n;
    n.ground("0").tline("n1", "n2", {50, 6.45, 2 * quarter_5ghz, 0}).port("n1").port("n2");
    auto y = assemble_admittance_matrix(n, 5e9);
    CHECK(y.shifted);
    CHECK(y.f_eval == Approx(5e9 * (1 + 1e-6)).epsilon(1e-12));
    CHECK(y.y.allFinite());
    auto s = s_parameters(n, FrequencyGrid::from_list({4e9, 5e9}));
    CHECK_FALSE(s.shifted[0]);
    CHECK(s.shifted[1]);
}

TEST_CASE("matched load reflects nothing", "[network][sparams]") {
    Netlist n;
    n.ground("0").resistor("p", "0", 50.0).port("p", 50.0);
    auto r = s_parameters(n, FrequencyGrid::linear(1e9, 10e9, 11));
    for (const auto& s : r.s) CHECK(std::abs(s(0, 0)) < 1e-12);
}

TEST_CASE("open lossless stub reflects everything", "[network][sparams]") {
    for (double len : {1e-3, 3.3e-3, 5.9e-3, 17e-3}) {
        Netlist n;
        n.ground("0").tline("p", "far", {50, 6.45, len, 0}).port("p", 50.0);
        auto r = s_parameters(n, FrequencyGrid::linear(1e9, 10e9, 101));
        for (const auto& s : r.s) CHECK(std::abs(std::abs(s(0, 0)) - 1.0) < 1e-9);
    }
}

TEST_CASE("standard drive transmission near -72 dB at 5 GHz", "[network][sparams]") {
    const double db = s21_db(devices::standard_drive(), 5e9);
    CHECK(db > -75.0);
    CHECK(db < -69.0);
}

TEST_CASE("floating subgraph is reported by name", "[network][sparams]") {
    Netlist n;
    n.ground("0").capacitor("a", "0", 1e-12).port("a");
    n.capacitor("x", "y", 1e-12);
    try {
        s_parameters(n, FrequencyGrid::from_list({1e9}));
        FAIL("expected topology error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::topology);
        CHECK(std::string(e.what()).find("x") != std::string::npos);
        CHECK(std::string(e.what()).find("y") != std::string::npos);
    }
}

TEST_CASE("resistive driving point", "[network][yin]") {
    Netlist n;
    n.ground("0").resistor("p", "0", 50.0).port("p");
    auto y = driving_point_admittance(n, 1, {}, FrequencyGrid::linear(1e9, 10e9, 5));
    for (auto v : y.y) CHECK(v == cplx(0.02, 0.0));
}

TEST_CASE("open stub driving point", "[network][yin]") {
    Netlist n;
    n.ground("0").tline("p", "far", {50, 6.45, quarter_5ghz / 2, 0}).port("p");
    auto y = driving_point_admittance(n, 1, {}, 5e9);
    CHECK(std::abs(y - cplx(0, 0.02)) < 1e-12);
}

TEST_CASE("missing termination is rejected", "[network][yin]") {
    auto n = devices::standard_drive();
    CHECK_THROWS_AS(driving_point_admittance(n, 2, {}, 5e9), Error);
}

TEST_CASE("quarter-wave filter admittance minimum near 5 GHz", "[network][yin]") {
    auto n = devices::lambda4_filter();
    auto grid = FrequencyGrid::standard();
    auto y = driving_point_admittance(n, 2, all_matched(n, 2), grid);
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (y.y[i].real() < y.y[best].real()) best = i;
    CHECK(std::abs(grid[best] - 5e9) < 50e6);
}

TEST_CASE("grounded and open terminations", "[network][yin]") {
    Netlist n;
    n.ground("0").capacitor("q", "0", 1e-13).capacitor("q", "r", 1e-14).resistor("r", "0", 1e3).port("q").port("r");
    const double w = constants::two_pi * 5e9;
    auto yg = driving_point_admittance(n, 1, {{2, Termination::grounded}}, 5e9);
    CHECK(std::abs(yg - cplx(0, w * 1.1e-13)) < 1e-15);
    auto yo = driving_point_admittance(n, 1, {{2, Termination::open}}, 5e9);
    const cplx zc = 1.0 / cplx(0, w * 1e-14);
    CHECK(std::abs(yo - (cplx(0, w * 1e-13) + 1.0 / (zc + 1e3))) < 1e-15);
}

TEST_CASE("stopband search on constant admittance is empty", "[network][stopband]") {
    std::vector<double> f{1e9, 2e9, 3e9};
    std::vector<cplx> y(3, cplx(0.02, 0));
    CHECK(find_stopband(f, y, 83e-15, 1e-3).empty());
}

TEST_CASE("quarter-wave stopband width", "[network][stopband]") {
    auto n = devices::lambda4_filter();
    auto sw = sweep(n, FrequencyGrid::standard(), 2, all_matched(n, 2));
    auto bands = find_stopband(sw, 83e-15, 1e-3);
    REQUIRE(bands.size() == 1);
    CHECK(std::abs(bands[0].center - 5e9) < 20e6);
    CHECK(bands[0].bandwidth > 35e6);
    CHECK(bands[0].bandwidth < 140e6);
}

TEST_CASE("half-wave stopband width", "[network][stopband]") {
    auto n = devices::lambda2_filter();
    auto sw = sweep(n, FrequencyGrid::standard(), 2, all_matched(n, 2));
    auto bands = find_stopband(sw, 83e-15, 1e-3);
    REQUIRE(bands.size() == 1);
    CHECK(bands[0].bandwidth > 225e6);
    CHECK(bands[0].bandwidth < 900e6);
}

TEST_CASE("stopband null depth", "[network][stopband]") {
    for (const auto& n : {devices::lambda4_filter(), devices::lambda2_filter()}) {
        auto sw = sweep(n, FrequencyGrid::standard(), 2, all_matched(n, 2));
        auto bands = find_stopband(sw, 83e-15, 1e-3);
        REQUIRE(bands.size() == 1);
        const double at_null = driving_point_admittance(n, 2, all_matched(n, 2), bands[0].peak).real();
        const double at_2g = driving_point_admittance(n, 2, all_matched(n, 2), 2e9).real();
        CHECK(at_null < 1e-6 * at_2g);
    }
}

TEST_CASE("filters pass the subharmonic band", "[network][sparams]") {
    auto std_n = devices::standard_drive();
    for (const auto& n : {devices::lambda4_filter(), devices::lambda2_filter()})
        for (double f = 1e9; f <= 2e9; f += 50e6) CHECK(s21_db(n, f) - s21_db(std_n, f) > 30.0);
}

TEST_CASE("residual loss gives second-scale stopband T1", "[network][stopband]") {
    devices::LineDesign lossy;
    lossy.loss_db_per_m = devices::residual_loss_db_per_m;
    const double t4 = t1_at(devices::lambda4_filter(4.5e-15, 83e-15, lossy), 5e9, 83e-15);
    const double t2 = t1_at(devices::lambda2_filter(4.6e-15, 83e-15, lossy), 5e9, 83e-15);
    CHECK(t4 > 5.0);
    CHECK(t4 < 30.0);
    CHECK(t2 > 2.0);
    CHECK(t2 < 15.0);
}

TEST_CASE("asymmetry splitting", "[network][splitting]") {
    auto pts = asymmetry_splitting(devices::lambda2_filter(), 4.6e-15, {0.0, 0.005, 0.012, 0.049, 0.1});
    REQUIRE(pts.size() == 5);
    CHECK(pts[0].splitting == 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].splitting >= pts[i - 1].splitting);
    CHECK(pts[3].splitting == Approx(1e9).epsilon(0.3));
    CHECK(std::max(pts[2].f_second, 5e9) - std::min(pts[2].f_first, 5e9) <= 500e6);
    WARN("splittings: " << pts[1].splitting << " " << pts[2].splitting << " " << pts[3].splitting << " "
                        << pts[4].splitting);
}

TEST_CASE("splitting needs labelled taps", "[network][splitting]") {
    CHECK_THROWS_AS(asymmetry_splitting(devices::standard_drive(), 4.6e-15, {0.0}), Error);
}

TEST_CASE("cascade oracle agrees with nodal solver on a filter chain", "[network][cascade]") {
    Netlist n;
    TLineParams l1{50, 6.45, 3.1e-3, 0.5}, l2{70, 6.45, 7.7e-3, 0.0};
    n.ground("0").port("a", 50).capacitor("a", "b", 2e-13).tline("b", "c", l1).inductor("c", "0", 3e-9);
    n.tline("c", "d", l2).capacitor("d", "0", 1e-13).resistor("d", "e", 20.0).port("e", 30);
    for (double f : {1.3e9, 4.7e9, 8.1e9}) {
        const double w = constants::two_pi * f;
        Eigen::Matrix2cd t = cascade::series(1.0 / cplx(0, w * 2e-13)) * tline_two_port(l1, f) *
                             cascade::shunt(1.0 / cplx(0, w * 3e-9)) * tline_two_port(l2, f) *
                             cascade::shunt(cplx(0, w * 1e-13)) * cascade::series(20.0);
        auto so = cascade::abcd_to_s(t, 50, 30);
        auto sm = s_matrix(n, f);
        CHECK((so - sm).cwiseAbs().maxCoeff() < 1e-9);
    }
}
