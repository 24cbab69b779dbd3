#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "gmarl/checkpoint.hpp"
#include "gmarl/error.hpp"

using namespace gmarl;

TEST_CASE("checkpoint files reproduce every double") {
    Checkpoint c;
    c.params.add("a", Tensor::vector({0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}));
    c.params.add("b", Tensor::from_rows({{std::nextafter(1.0, 2.0), 0.0}, {-0.0, 1e-17}}));
    c.strategy = "learned";
    c.config_digest = "0123456789abcdef";
    c.seed = 18446744073709551615ull;
    c.attributes["k"] = "v";
    const auto path = std::filesystem::temp_directory_path() / "gmarl_ckpt_test.json";
    save_checkpoint(path, c);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back == c);
    CHECK(std::signbit(back.params.get("b").at(1, 0)));
    CHECK(checkpoint_to_string(back) == checkpoint_to_string(c));
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), IoError);

    Checkpoint bad = c;
    bad.params.set("a", Tensor::vector({0, std::numeric_limits<double>::infinity(), 0, 0}));
    CHECK_THROWS_AS(checkpoint_to_string(bad), NumericError);
}
