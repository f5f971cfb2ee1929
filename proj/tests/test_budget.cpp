#include <catch_amalgamated.hpp>

#include <qdrive/budget.hpp>
#include <qdrive/devices.hpp>

using namespace qdrive;
using Catch::Approx;

namespace {

AttenuationChain single(double db, double t) { return {{{"base", db, t}}, 300.0}; }

GateBudget subharmonic_gate(double gamma) {
    GateBudget g;
    g.duration = 10e-9;
    g.mode = DriveMode::subharmonic;
    g.gamma = gamma;
    g.transmon = TransmonParams::from_frequency(5e9, 233e6);
    return g;
}

} // namespace

TEST_CASE("Bose-Einstein occupation", "[budget]") {
    CHECK(bose_einstein_occupation(5e9, 0.01) == Approx(3.7894491144481078e-11).epsilon(1e-9));
    CHECK(bose_einstein_occupation(5e9, 300) == Approx(1249.6972140558075).epsilon(1e-11));
    const double t1 = constants::h * 5e9 / (constants::k_B * std::log(2.0));
    CHECK(bose_einstein_occupation(5e9, t1) == Approx(1.0).epsilon(1e-13));
}

TEST_CASE("chain photon number", "[budget]") {
    CHECK(chain_photon_number(single(0, 0.01), 5e9) == Approx(1249.6972140558075).epsilon(1e-12));
    const double n60 = chain_photon_number(single(60, 0.01), 5e9);
    CHECK(n60 == Approx(1.2496972519502607e-3).epsilon(1e-10));
    CHECK(n60 < 2.5e-3);
    const auto c43 = AttenuationChain::parse("4K:20@4,MXC:23@0.01");
    CHECK(chain_photon_number(c43, 5e9) == Approx(0.14288609173068332).epsilon(1e-10));
}

TEST_CASE("splitting a stage leaves occupation unchanged", "[budget]") {
    const auto a = AttenuationChain::parse("a:20@4,b:30@0.1");
    const auto b = AttenuationChain::parse("a:7@4,a2:13@4,b:30@0.1");
    CHECK(std::abs(chain_photon_number(a, 6e9) - chain_photon_number(b, 6e9)) < 1e-12);
}

TEST_CASE("photon number is monotone in attenuation and temperature", "[budget]") {
    auto c = AttenuationChain::parse("a:20@4,b:10@0.8,c:20@0.01");
    const double n0 = chain_photon_number(c, 5e9);
    c.stages[1].db += 3;
    CHECK(chain_photon_number(c, 5e9) <= n0);
    c.stages[1].db -= 3;
    c.stages[1].temperature *= 2;
    CHECK(chain_photon_number(c, 5e9) >= n0);
}

TEST_CASE("chain strings", "[budget]") {
    const auto c = AttenuationChain::parse("4K:40@4,MXC:20@0.01");
    REQUIRE(c.stages.size() == 2);
    CHECK(c.stages[0].label == "4K");
    CHECK(c.stages[1].temperature == 0.01);
    CHECK(c.total_db() == 60.0);
    CHECK(c.temperatures_non_increasing());
    CHECK_FALSE(AttenuationChain::parse("20@0.01,10@4").temperatures_non_increasing());
    CHECK(AttenuationChain::parse("20dB@4").stages[0].db == 20.0);
    CHECK_THROWS_AS(AttenuationChain::parse("4K:40"), ParseError);
    CHECK_THROWS_AS(AttenuationChain::parse("x:-3@4"), ParseError);
    CHECK_THROWS_AS(AttenuationChain::parse(""), ParseError);
}

TEST_CASE("resonant room-temperature power", "[budget]") {
    GateBudget g;
    g.duration = 10e-9;
    g.gamma = 1000.0;
    g.transmon = TransmonParams::from_frequency(5e9, 233e6);
    const auto b = required_room_temperature_power(g, AttenuationChain::drive_line(), 50, 5e9);
    CHECK(b.v_chip == Approx(9.0413419298773638e-5).epsilon(1e-10));
    CHECK(b.p_chip_dbm == Approx(-70.875342121711312).epsilon(1e-10));
    CHECK(b.p_room_dbm == Approx(-10.875342121711312).epsilon(1e-10));
}

TEST_CASE("subharmonic power follows the cubic law", "[budget]") {
    auto g = subharmonic_gate(1e6);
    const auto chain = AttenuationChain::drive_line();
    const double p10 = required_room_temperature_power(g, chain, 50, 5e9 / 3).p_room_dbm;
    g.duration = 5e-9;
    const double p5 = required_room_temperature_power(g, chain, 50, 5e9 / 3).p_room_dbm;
    CHECK(p5 - p10 == Approx(20.0 * std::log10(2.0) / 3.0).epsilon(1e-12));
}

TEST_CASE("unreachable subharmonic gates name eta", "[budget]") {
    auto g = subharmonic_gate(1e6);
    g.duration = 0.5e-9;
    try {
        required_room_temperature_power(g, AttenuationChain::drive_line(), 50, 5e9 / 3);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::drive_too_weak);
        CHECK(std::string(e.what()).find("eta") != std::string::npos);
    }
}

TEST_CASE("subharmonic scenarios through the filters", "[budget]") {
    const auto chain = AttenuationChain::drive_line();
    const auto p = TransmonParams::from_frequency(5e9, 233e6);
    auto g4 = subharmonic_gate(gamma_from_netlist(devices::lambda4_filter(4.5e-15, p.c_q), 2, 5e9 / 3, p.c_q));
    auto g2 = subharmonic_gate(gamma_from_netlist(devices::lambda2_filter(4.6e-15, p.c_q), 2, 5e9 / 3, p.c_q));
    const double p4 = required_room_temperature_power(g4, chain, 50, 5e9 / 3).p_room_dbm;
    const double p2 = required_room_temperature_power(g2, chain, 50, 5e9 / 3).p_room_dbm;
    CHECK(std::abs(p4 + 16) < 5);
    CHECK(std::abs(p2 + 22) < 5);
}

TEST_CASE("base plate heat", "[budget]") {
    const auto chain = AttenuationChain::drive_line();
    CHECK(std::abs(base_plate_heat(-11, chain) + 53) < 1.0);
    CHECK(std::abs(base_plate_heat(-16, chain) + 58) < 1.0);
    CHECK(std::abs(base_plate_heat(-22, chain) + 64) < 1.0);
    CHECK(base_plate_heat(-11, AttenuationChain::parse("a:40@4,b:20@0.01")) == Approx(-51.0436).margin(1e-3));
    CHECK(std::isinf(base_plate_heat(-11, AttenuationChain::parse("a:60@4,b:0@0.01"))));
}
