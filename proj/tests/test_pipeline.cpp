#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qubodos/errors.hpp"
#include "qubodos/pipeline.hpp"

using namespace qubodos;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(
[run]
name = tiny
system = ising
seed = 3

[ising]
L = 2

[plan]
m = 1

[sampler]
depth = 40
blocks = 2
stride = 4
max_rounds = 2
pilot_sweeps = 200

[validate]
max_mean_rel_error = 1
min_within_3sem = 0

[reweight]
beta_min = 0
beta_max = 1
beta_step = 0.5
)";

RunConfig tiny(const fs::path& out)
{
    std::istringstream in(kTiny);
    auto c = parse_config(in);
    c.output = out.string();
    return c;
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("qubodos-test-" + name);
    fs::remove_all(p);
    return p;
}

std::vector<std::string> files_under(const fs::path& root)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s)
{
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("interval plans")
{
    PlanSpec wide;
    wide.m = 3;
    const auto l12 = plan_intervals(wide, 0, 144);
    CHECK(l12.intervals.front().lo <= 0);
    CHECK(l12.intervals.back().hi >= 144);
    for (std::size_t k = 1; k < l12.intervals.size(); ++k) {
        CHECK(l12.intervals[k].lo == l12.intervals[k - 1].lo + 1);
        CHECK(l12.intervals[k].hi - l12.intervals[k].lo == 7);
    }

    PlanSpec melt;
    melt.m = 2;
    melt.start = 10;
    melt.stride = 4;
    melt.count = 4;
    const auto m = plan_intervals(melt, 12, 18);
    REQUIRE(m.intervals.size() == 4);
    CHECK(m.intervals[0].lo == 10);
    CHECK(m.intervals[0].hi == 13);
    CHECK(m.intervals[1].lo == 14);
    CHECK(m.intervals[1].hi == 17);

    PlanSpec one;
    one.m = 2;
    one.count = 1;
    CHECK(plan_intervals(one, 0, 3).intervals.size() == 1);

    PlanSpec gappy;
    gappy.m = 1;
    gappy.stride = 3;
    CHECK_THROWS_AS(plan_intervals(gappy, 0, 10), DimensionError);

    PlanSpec unit;
    unit.m = 1;
    const std::vector<int> allowed{0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 16};
    CHECK_FALSE(plan_intervals(unit, 0, 16, allowed).warnings.empty());
    PlanSpec four;
    four.m = 2;
    CHECK(plan_intervals(four, 0, 16, allowed).warnings.empty());
}

TEST_CASE("config parsing")
{
    const auto c = tiny("x");
    CHECK(c.L == 2);
    CHECK(c.sampling.depth == 40);
    CHECK(c.seed == 3);
    std::ostringstream once;
    write_config(once, c);
    std::istringstream in(once.str());
    std::ostringstream twice;
    write_config(twice, parse_config(in));
    CHECK(once.str() == twice.str());

    std::istringstream bad("[sampler]\nunknown_key = 1\n");
    CHECK_THROWS(parse_config(bad));
    std::istringstream negative("[sampler]\ndepth = -4\n");
    CHECK_THROWS(parse_config(negative));
    CHECK(config_reference().find("[sampler]") != std::string::npos);

    for (const auto& e : fs::directory_iterator(QUBODOS_CONFIG_DIR)) {
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_config(e.path().string()));
    }
}

TEST_CASE("dry run executes nothing")
{
    const auto out = scratch("dry");
    PipelineOptions opt;
    opt.dry_run = true;
    const auto rep = run_pipeline(tiny(out), opt);
    CHECK_FALSE(rep.plan.intervals.empty());
    CHECK(rep.ran.empty());
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("pipeline determinism, resumption and stage isolation")
{
    const auto a = scratch("det-a"), b = scratch("det-b");
    const auto ra = run_pipeline(tiny(a));
    const auto rb = run_pipeline(tiny(b));
    CHECK(ra.validated);
    CHECK(ra.validations_passed);
    CHECK(ra.ran == stage_names());

    const auto fa = files_under(a);
    REQUIRE(fa == files_under(b));
    CHECK(contains(fa, "reconstruct/dos.tsv"));
    CHECK(contains(fa, "validation/summary.txt"));
    CHECK(contains(fa, "validation/comparison.tsv"));
    for (const auto& f : fa) {
        if (f == "config.ini") continue;  // records the output path
        CAPTURE(f);
        CHECK(hash_files(a, {f}) == hash_files(b, {f}));
    }

    const auto again = run_pipeline(tiny(a));
    CHECK(again.ran.empty());
    CHECK(again.skipped == stage_names());

    const auto before = hash_files(a, {"reconstruct/dos.tsv"});
    fs::remove_all(a / "reconstruct");
    const auto redo = run_pipeline(tiny(a));
    for (const char* s : {"plan", "sample", "histogram"}) CHECK(contains(redo.skipped, s));
    for (const char* s : {"reconstruct", "reweight", "validate"}) CHECK(contains(redo.ran, s));
    CHECK(hash_files(a, {"reconstruct/dos.tsv"}) == before);

    auto other = tiny(scratch("det-c"));
    other.seed = 4;
    run_pipeline(other);
    CHECK(hash_files(other.output, {"samples/interval_000.archive"}) != hash_files(a, {"samples/interval_000.archive"}));

    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(other.output);
}

TEST_CASE("stage failures name the stage and keep earlier outputs")
{
    const auto out = scratch("fail");
    fs::create_directories(out);
    std::ofstream(out / "reconstruct") << "blocks the reconstruct directory\n";
    try {
        run_pipeline(tiny(out));
        FAIL("expected a stage failure");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("stage reconstruct failed") != std::string::npos);
    }
    CHECK(fs::exists(out / "samples" / "interval_000.archive"));
    CHECK(fs::exists(out / "histograms" / "all.tsv"));
    fs::remove_all(out);
}
