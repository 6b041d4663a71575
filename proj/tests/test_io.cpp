#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "cstsim/io/config.hpp"
#include "cstsim/io/csv.hpp"
#include "cstsim/io/svg.hpp"

using namespace cstsim;
using namespace cstsim::io;

namespace {

int error_line(const std::string& text) {
    try {
        Config::parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndTypes) {
    const auto c = Config::parse(
        "# header\n"
        "[sample]\n"
        "temperature = 175   # K\n"
        "\n"
        "[field]\n"
        "axis = 0, 1, 0\n"
        "b_min=+0.5\n"
        "[model]\n"
        "fit_baseline = yes\n"
        "signal = analytic\n");
    EXPECT_DOUBLE_EQ(c.require_double("sample", "temperature"), 175.0);
    EXPECT_DOUBLE_EQ(c.get_double("field", "b_min", 0.0), 0.5);
    EXPECT_DOUBLE_EQ(c.get_double("field", "b_max", 25.0), 25.0);
    const auto axis = c.get_vec3("field", "axis", {0, 0, 0});
    EXPECT_EQ(axis[1], 1.0);
    EXPECT_TRUE(c.get_bool("model", "fit_baseline", false));
    EXPECT_EQ(c.get_string("model", "signal", ""), "analytic");
    EXPECT_EQ(c.line_of("field", "axis"), 6);
    EXPECT_EQ(c.line_of("field", "nope"), 0);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("[a]\nx = 1\nx = 2\n"), 3);
    EXPECT_EQ(error_line("[a]\njust words\n"), 2);
    EXPECT_EQ(error_line("x = 1\n"), 1);
    EXPECT_EQ(error_line("[a\n"), 1);
    EXPECT_EQ(error_line("[]\n"), 1);
    EXPECT_EQ(error_line("[a]\n= 3\n"), 2);
    const auto c = Config::parse("[a]\n\nx = 1.5.2\n");
    try {
        c.require_double("a", "x");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Config, MissingAndMalformedValues) {
    const auto c = Config::parse("[a]\nx = abc\nb = maybe\nv = 1,2\n");
    EXPECT_THROW(c.require_double("a", "missing"), ConfigError);
    EXPECT_THROW(c.require_string("b", "x"), ConfigError);
    EXPECT_THROW(c.get_double("a", "x", 0.0), ConfigError);
    EXPECT_THROW(c.get_bool("a", "b", false), ConfigError);
    EXPECT_THROW(c.get_vec3("a", "v", {0, 0, 0}), ConfigError);
}

TEST(Config, SchemaRejectsUnknownKeysAndSections) {
    const Schema schema{{"a", {"x", "y"}}};
    EXPECT_NO_THROW(Config::parse("[a]\nx = 1\n").check(schema));
    try {
        Config::parse("[a]\nx = 1\nz = 2\n").check(schema);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    EXPECT_THROW(Config::parse("[b]\nx = 1\n").check(schema), ConfigError);
}

TEST(Config, CanonicalFormIgnoresOrderSpacingAndComments) {
    const auto a = Config::parse("[b]\ny=2\n[a]\nx = 1 # c\n");
    const auto b = Config::parse("# other\n[a]\n  x   =   1\n\n[b]\ny = 2\n");
    EXPECT_EQ(a.canonical(), b.canonical());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    const auto c = Config::parse("[a]\nx = 1\n[b]\ny = 3\n");
    EXPECT_NE(a.hash(), c.hash());
    // canonical text parses back to itself
    EXPECT_EQ(Config::parse(a.canonical()).canonical(), a.canonical());
}

TEST(Config, LoadMissingFileThrows) { EXPECT_THROW(Config::load("/nonexistent/cfg.cfg"), ConfigError); }

TEST(Csv, RoundTripIsExact) {
    spectra::Spectrum s;
    s.x = {0.1, 1.0 / 3.0, 15.790274370251828, 1e-300};
    s.y = {-1e-7, std::numeric_limits<double>::denorm_min(), 3.4483453869110913e-06, 0.0};
    std::stringstream ss;
    write_spectrum_csv(ss, s);
    EXPECT_EQ(ss.str().substr(0, 17), "B_mT,dPL_over_PL\n");
    const auto r = read_spectrum_csv(ss);
    ASSERT_EQ(r.x.size(), s.x.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        EXPECT_EQ(r.x[i], s.x[i]);
        EXPECT_EQ(r.y[i], s.y[i]);
    }
}

TEST(Csv, MalformedInputReportsRowAndColumn) {
    auto fails = [](const std::string& text, const std::string& needle, int line) {
        std::stringstream ss(text);
        try {
            read_spectrum_csv(ss);
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
            EXPECT_EQ(e.line(), line);
            return;
        }
        ADD_FAILURE() << "no error for: " << text;
    };
    fails("B,y\n1,2\n3,x\n", "column 2", 3);
    fails("B,y\n1,2,3\n", "3 columns", 2);
    fails("B\n1\n", "header", 1);
    fails("", "empty", 0);
    std::stringstream crlf("B,y\r\n1,2\r\n");
    EXPECT_EQ(read_spectrum_csv(crlf).y.at(0), 2.0);
}

TEST(Svg, WritesPolylineWithLabels) {
    spectra::Spectrum s{{0.0, 1.0, 2.0}, {0.0, 1.0, -1.0}, {}};
    std::ostringstream os;
    write_svg(os, s, "B (mT)", "dPL/PL");
    const auto t = os.str();
    EXPECT_NE(t.find("<svg"), std::string::npos);
    EXPECT_NE(t.find("polyline"), std::string::npos);
    EXPECT_NE(t.find("B (mT)"), std::string::npos);
}
