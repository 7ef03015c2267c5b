// End-to-end checks of the command-line tool. The binary path arrives through
// the CROWDTAB_CLI environment variable set by the test harness.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

std::string cli_binary() {
    const char* path = std::getenv("CROWDTAB_CLI");
    if (path == nullptr || *path == '\0')
        throw std::runtime_error("CROWDTAB_CLI is not set; run through ctest");
    return path;
}

int run(const std::string& args) {
    const std::string cmd = "\"" + cli_binary() + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// A fresh working directory per scenario, wiped on reuse.
std::string fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "crowdtab_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// Generates a small mixed-type dataset whose workers are essentially
// noise-free, so every downstream method should recover the truth.
std::string generate_easy_dataset(const std::string& dir) {
    const int rc = run(
        "generate --rows 6 --cols 4 --ratio 0.5 --difficulty 1e-10 --workers 8 "
        "--answers-per-task 3 --seed 5 --out-dir " + dir);
    REQUIRE(rc == 0);
    return dir;
}

}  // namespace

TEST_CASE("usage errors exit with the invalid-input code") {
    CHECK(run("") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("generate --help") == 0);
    CHECK(run("infer --schema /nonexistent/schema.json --answers /nonexistent/a.csv") == 2);
    CHECK(run("simulate --policy teleport") == 2);
}

TEST_CASE("generation is reproducible under a fixed seed") {
    const std::string a = fresh_dir("gen_a");
    const std::string b = fresh_dir("gen_b");
    const std::string c = fresh_dir("gen_c");
    const std::string flags = "generate --rows 5 --cols 3 --workers 6 --answers-per-task 2 ";
    REQUIRE(run(flags + "--seed 7 --out-dir " + a) == 0);
    REQUIRE(run(flags + "--seed 7 --out-dir " + b) == 0);
    REQUIRE(run(flags + "--seed 8 --out-dir " + c) == 0);
    for (const char* file : {"schema.json", "answers.csv", "truth.csv"}) {
        CHECK(read_file(a + "/" + file) == read_file(b + "/" + file));
    }
    CHECK(read_file(a + "/answers.csv") != read_file(c + "/answers.csv"));
}

TEST_CASE("inference on a noise-free dataset recovers the truth") {
    const std::string data = generate_easy_dataset(fresh_dir("pipeline_data"));
    const std::string inferred = fresh_dir("pipeline_infer");
    REQUIRE(run("infer --schema " + data + "/schema.json --answers " + data +
                "/answers.csv --out-dir " + inferred) == 0);
    CHECK(fs::exists(inferred + "/estimates.csv"));
    CHECK(fs::exists(inferred + "/worker_quality.csv"));
    CHECK(fs::exists(inferred + "/difficulty.csv"));

    const std::string scored = fresh_dir("pipeline_eval");
    REQUIRE(run("evaluate --schema " + data + "/schema.json --answers " + data +
                "/answers.csv --estimates " + inferred + "/estimates.csv --truth " + data +
                "/truth.csv --out-dir " + scored) == 0);
    std::istringstream metrics(read_file(scored + "/metrics.csv"));
    std::string header, row;
    REQUIRE(std::getline(metrics, header));
    REQUIRE(std::getline(metrics, row));
    CHECK(header == "method,error_rate,mnad");
    const auto fields = split(row, ',');
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == "estimates");
    CHECK(fields[1] == "0");
    CHECK(std::stod(fields[2]) < 0.05);
}

TEST_CASE("baselines score only the columns their method covers") {
    const std::string data = generate_easy_dataset(fresh_dir("baseline_data"));
    const std::string mv = fresh_dir("baseline_mv");
    REQUIRE(run("baseline --schema " + data + "/schema.json --answers " + data +
                "/answers.csv --truth " + data + "/truth.csv --method mv --out-dir " + mv) == 0);
    std::istringstream metrics(read_file(mv + "/metrics.csv"));
    std::string header, row;
    REQUIRE(std::getline(metrics, header));
    REQUIRE(std::getline(metrics, row));
    const auto fields = split(row, ',');
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == "mv");
    CHECK(fields[1] == "0");   // perfect workers, so majority vote is exact
    CHECK(fields[2].empty());  // no continuous cells were estimated

    SUBCASE("without ground truth no metrics are written") {
        const std::string plain = fresh_dir("baseline_plain");
        REQUIRE(run("baseline --schema " + data + "/schema.json --answers " + data +
                    "/answers.csv --method both --out-dir " + plain) == 0);
        CHECK(fs::exists(plain + "/estimates.csv"));
        CHECK_FALSE(fs::exists(plain + "/metrics.csv"));
    }
    SUBCASE("an unknown method is rejected") {
        CHECK(run("baseline --schema " + data + "/schema.json --answers " + data +
                  "/answers.csv --method guess --out-dir " + mv) == 2);
    }
}

TEST_CASE("noise injection perturbs answers in place") {
    const std::string data = generate_easy_dataset(fresh_dir("noise_data"));
    const std::string untouched = fresh_dir("noise_zero");
    REQUIRE(run("noise --schema " + data + "/schema.json --answers " + data +
                "/answers.csv --gamma 0 --out-dir " + untouched) == 0);
    CHECK(read_file(untouched + "/answers.csv") == read_file(data + "/answers.csv"));

    const std::string shifted = fresh_dir("noise_shifted");
    REQUIRE(run("noise --schema " + data + "/schema.json --answers " + data +
                "/answers.csv --gamma 0.3 --seed 11 --out-dir " + shifted) == 0);
    CHECK(read_file(shifted + "/answers.csv") != read_file(data + "/answers.csv"));

    CHECK(run("noise --schema " + data + "/schema.json --answers " + data +
              "/answers.csv --gamma 1.5 --out-dir " + shifted) == 2);
}

TEST_CASE("the assignment simulator writes a learning curve") {
    const std::string out = fresh_dir("simulate_a");
    const std::string flags =
        "simulate --rows 4 --cols 3 --workers 6 --answers-per-task 2 --budget 30 "
        "--policy saig --k 1 --seed 3 --out-dir ";
    REQUIRE(run(flags + out) == 0);
    std::istringstream curve(read_file(out + "/curve.csv"));
    std::string line;
    REQUIRE(std::getline(curve, line));
    CHECK(line == "answers,answers_per_task,error_rate,mnad");
    std::size_t checkpoints = 0;
    while (std::getline(curve, line)) checkpoints++;
    CHECK(checkpoints >= 2);
    CHECK(fs::exists(out + "/metrics.csv"));

    SUBCASE("runs are reproducible under a fixed seed") {
        const std::string again = fresh_dir("simulate_b");
        REQUIRE(run(flags + again) == 0);
        CHECK(read_file(again + "/curve.csv") == read_file(out + "/curve.csv"));
    }
}
