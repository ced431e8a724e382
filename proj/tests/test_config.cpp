#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vim/config.hpp"

using namespace vim;
using nlohmann::json;

namespace {

json base() {
    return json::parse(R"({
      "model": {"family": "PowerLaw", "c1": 1, "c2": 0, "c3": 1, "c4": 1, "k1": 1, "k2": 2, "k3": 1},
      "mc": {"seed": 5}
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, DefaultsFillMissingSections) {
    const RunConfig c = parse_config(base());
    EXPECT_EQ(c.mc.seed, 5u);
    EXPECT_EQ(c.mc.dt, McConfig{}.dt);
    EXPECT_EQ(c.excursion.epsilon, ExcursionConfig{}.epsilon);
    EXPECT_DOUBLE_EQ(c.tree.delta_or_default(), 1e-3 * c.tree.x0);
}

TEST(Config, ShippedConfigsRoundTrip) {
    for (const auto& e : std::filesystem::directory_iterator(VIM_SOURCE_DIR "/configs")) {
        SCOPED_TRACE(e.path().string());
        const RunConfig c = parse_config(slurp(e.path()));
        EXPECT_EQ(parse_config(to_json(c)), c);
    }
}

TEST(Config, TabulatedRoundTrip) {
    json j = base();
    j["model"] = {{"family", "Tabulated"}, {"y", {0.0, 1.0, 2.0}}, {"a", {0.0, 1.0, 2.0}},
                  {"h", {0.0, -0.5, -2.0}},  {"g", {0.0, 1.0, 2.0}},  {"c1", 1.0}, {"c2", 1.0}};
    const RunConfig c = parse_config(j);
    EXPECT_EQ(parse_config(to_json(c)), c);
}

TEST(Config, RejectsUnknownFields) {
    json j = base();
    j["mc"]["sede"] = 1;
    EXPECT_THROW((void)parse_config(j), ConfigError);
    j = base();
    j["extra"] = {};
    EXPECT_THROW((void)parse_config(j), ConfigError);
    j = base();
    j["model"]["k4"] = 1;
    EXPECT_THROW((void)parse_config(j), ConfigError);
}

TEST(Config, SeedIsRequired) {
    json j = base();
    j["mc"].erase("seed");
    EXPECT_THROW((void)parse_config(j), ConfigError);
}

TEST(Config, RejectsBadValues) {
    auto bad = [](auto edit) {
        json j = base();
        edit(j);
        EXPECT_THROW((void)parse_config(j), ConfigError) << j.dump();
    };
    bad([](json& j) { j["mc"]["dt"] = -0.1; });
    bad([](json& j) { j["mc"]["n_paths"] = 0; });
    bad([](json& j) { j["mc"]["dt"] = "fast"; });
    bad([](json& j) { j["excursion"] = {{"epsilon", {0.1, 0.2}}}; });
    bad([](json& j) { j["excursion"] = {{"epsilon", json::array()}}; });
    bad([](json& j) { j["tree"] = {{"x0", -1}}; });
    bad([](json& j) { j["model"]["c4"] = 0; });
    bad([](json& j) { j["model"]["family"] = "Gompertz"; });
    EXPECT_THROW((void)parse_config(std::string("{not json")), ConfigError);
}
