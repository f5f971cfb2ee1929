#include <catch_amalgamated.hpp>

#include <qdrive/devices.hpp>
#include <qdrive/rfio.hpp>

#include <random>

using namespace qdrive;
using Catch::Approx;

TEST_CASE("quantities with engineering suffixes", "[rfio][units]") {
    CHECK(*try_parse_quantity("80aF") == Approx(80e-18).epsilon(1e-15));
    CHECK(*try_parse_quantity("4.5fF") == Approx(4.5e-15).epsilon(1e-15));
    CHECK(*try_parse_quantity("5.9055mm") == Approx(5.9055e-3).epsilon(1e-15));
    CHECK(*try_parse_quantity("1nH") == Approx(1e-9).epsilon(1e-15));
    CHECK(*try_parse_quantity("2.5G") == Approx(2.5e9).epsilon(1e-15));
    CHECK(*try_parse_quantity("50ohm") == 50.0);
    CHECK(*try_parse_quantity("10m") == Approx(0.01).epsilon(1e-15));
    CHECK(*try_parse_quantity("1e9") == 1e9);
    CHECK(*try_parse_quantity("3MHz") == 3e6);
    CHECK_FALSE(try_parse_quantity("abc"));
    CHECK_FALSE(try_parse_quantity("1.0.0"));
    CHECK_FALSE(try_parse_quantity("5xF"));
    CHECK_FALSE(try_parse_quantity(""));
}

TEST_CASE("minimal netlist document", "[rfio][netlist]") {
    auto n = parse_netlist("GND 0\nC 1 0 80aF\nPORT 1 1 50");
    REQUIRE(n.elements.size() == 1);
    REQUIRE(n.ports.size() == 1);
    CHECK(n.elements[0].value == Approx(80e-18));
    CHECK(element_role(n, n.elements[0]) == "ShuntCap");
}

TEST_CASE("transmission line statement", "[rfio][netlist]") {
    auto n = parse_netlist("# quarter-wave stub\nGND 0\nTL 1 2 z0=50 eeff=6.45 len=5.9055mm\nPORT 1 1 50\n");
    REQUIRE(n.elements.size() == 1);
    CHECK(n.elements[0].kind == ElementKind::tline);
    CHECK(n.elements[0].line.length == Approx(5.9055e-3).epsilon(1e-15));
    CHECK(n.elements[0].line.eps_eff == 6.45);
}

TEST_CASE("keywords are case-insensitive, nodes are not", "[rfio][netlist]") {
    auto n = parse_netlist("gnd 0\nc A a 1p\nr a 0 50\nPort 1 A");
    CHECK(n.nodes().count("A"));
    CHECK(n.nodes().count("a"));
}

TEST_CASE("missing ground is a topology error", "[rfio][netlist]") {
    try {
        parse_netlist("C 1 0 4.5fF");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::topology);
        CHECK(std::string(e.what()) == "no ground node");
    }
}

TEST_CASE("parse errors name the offending line", "[rfio][netlist]") {
    auto line_of = [](const char* text) {
        try {
            parse_netlist(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("GND 0\nQ 1 0 5p\n") == 2);
    CHECK(line_of("GND 0\nC 1 0 5p\nPORT 1 7 50\n") == 3);
    CHECK(line_of("GND 0\nC 1 0 5p\nPORT 1 1\nPORT 1 1\n") == 4);
    CHECK(line_of("GND 0\n\nC 1 0 5..p\n") == 3);
    CHECK(line_of("GND 0\nTL 1 2 z0=50 len=1m\n") == 2);
}

TEST_CASE("netlist serialization round-trips", "[rfio][netlist]") {
    for (const auto& n : {devices::standard_drive(), devices::lambda4_filter(), devices::lambda2_filter()}) {
        const auto once = parse_netlist(serialize_netlist(n));
        CHECK(once == n);
        CHECK(parse_netlist(serialize_netlist(once)) == once);
    }
}

TEST_CASE("garbage input yields a diagnostic", "[rfio][netlist]") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 300; ++k) {
        std::string s(static_cast<std::size_t>(rng() % 200), '\0');
        for (auto& ch : s) ch = static_cast<char>(rng() & 0xff);
        try {
            parse_netlist(s);
        } catch (const Error&) {
        }
    }
    SUCCEED();
}

TEST_CASE("two-port through connection", "[rfio][touchstone]") {
    auto b = parse_touchstone("# GHz S RI R 50\n5.0 0.0 0.0 1.0 0.0 1.0 0.0 0.0 0.0\n");
    REQUIRE(b.ports == 2);
    REQUIRE(b.freq.size() == 1);
    CHECK(b.freq[0] == 5e9);
    CHECK(b.data[0](1, 0) == cplx(1, 0));
    CHECK(b.data[0](0, 0) == cplx(0, 0));
}

TEST_CASE("magnitude-angle and decibel decoding", "[rfio][touchstone]") {
    auto ma = parse_touchstone("# Hz S MA R 50\n1 1 90\n");
    CHECK(std::abs(ma.data[0](0, 0) - cplx(0, 1)) < 1e-15);
    auto db = parse_touchstone("# MHz S DB R 50\n1 -72 0\n");
    CHECK(std::abs(db.data[0](0, 0)) == Approx(2.5118864315095801e-4).epsilon(1e-14));
}

TEST_CASE("two-port column order is 11 21 12 22", "[rfio][touchstone]") {
    auto b = parse_touchstone("# GHz S RI R 50\n1 1 0 2 0 3 0 4 0\n");
    CHECK(b.data[0](1, 0).real() == 2.0);
    CHECK(b.data[0](0, 1).real() == 3.0);
}

TEST_CASE("unsupported parameter types are refused", "[rfio][touchstone]") {
    for (const char* t : {"Y", "Z", "G", "H"}) {
        try {
            parse_touchstone(std::string("# GHz ") + t + " RI R 50\n1 0 0\n");
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::unsupported);
        }
    }
}

TEST_CASE("non-monotonic frequencies are a format error", "[rfio][touchstone]") {
    try {
        parse_touchstone("# GHz S RI R 50\n2 0 0\n1 0 0\n");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::format);
    }
}

TEST_CASE("option line grammar is exact", "[rfio][touchstone]") {
    TouchstoneBlock b;
    b.ports = 1;
    b.freq = {1e9};
    b.data = {Eigen::MatrixXcd::Constant(1, 1, cplx(0.5, -0.25))};
    const auto text = write_touchstone(b);
    CHECK(text.substr(0, text.find('\n')) == "# GHz S RI R 50");
}

TEST_CASE("touchstone round trip in every format and port count", "[rfio][touchstone]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int ports = 1; ports <= 4; ++ports) {
        for (auto fmt : {TsFormat::RI, TsFormat::MA, TsFormat::DB}) {
            TouchstoneBlock b;
            b.ports = ports;
            b.format = fmt;
            b.unit = "MHz";
            b.r_ref = 75;
            for (int r = 0; r < 5; ++r) {
                b.freq.push_back(1e8 * (r + 1) + 12345.678);
                Eigen::MatrixXcd s(ports, ports);
                for (int i = 0; i < ports * ports; ++i) s(i / ports, i % ports) = cplx(u(rng), u(rng));
                b.data.push_back(s);
            }
            const auto back = parse_touchstone(write_touchstone(b), ports);
            REQUIRE(back.ports == ports);
            CHECK(back.format == fmt);
            CHECK(back.r_ref == 75);
            for (std::size_t r = 0; r < b.freq.size(); ++r) {
                CHECK(std::abs(back.freq[r] - b.freq[r]) <= 1e-12 * b.freq[r]);
                CHECK((back.data[r] - b.data[r]).cwiseAbs().maxCoeff() <= 1e-12 * b.data[r].cwiseAbs().maxCoeff());
            }
            // layout inference works without the explicit count
            CHECK(parse_touchstone(write_touchstone(b)).ports == ports);
        }
    }
}

TEST_CASE("csv output", "[rfio][csv]") {
    Table t;
    t.add("f_Hz", {1e9});
    CHECK(write_csv(t) == "f_Hz\n1000000000\n");
    CHECK(write_csv(Table{}) == "\n");
    Table e;
    e.add("a", {});
    CHECK(write_csv(e) == "a\n");
}

TEST_CASE("csv row count and ragged columns", "[rfio][csv]") {
    Table t;
    for (const char* c : {"a", "b", "c", "d"}) t.add(c, std::vector<double>(2001, 0.125));
    const auto text = write_csv(t);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2002);
    t.columns[2].pop_back();
    CHECK_THROWS_AS(write_csv(t), Error);
}

TEST_CASE("csv values round-trip bit-exactly", "[rfio][csv]") {
    Table t;
    t.add("x,with comma", {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23});
    const auto back = read_csv(write_csv(t));
    CHECK(back.names == t.names);
    CHECK(back.columns == t.columns);
}
