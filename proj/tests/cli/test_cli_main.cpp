// End-to-end checks of the hydrodp binary: exit-code contract, printed f1,
// metrics rows, seed-pinned simulation reproducibility. The binary path
// arrives in HYDRODP_BIN (set by ctest).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    if (ok) {
        std::printf("ok    %s\n", what.c_str());
    } else {
        std::printf("FAIL  %s\n", what.c_str());
        ++g_failures;
    }
}

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& cmd) {
    const fs::path tmp = fs::temp_directory_path() / "hydrodp_cli_out.txt";
    const std::string full = cmd + " > " + tmp.string() + " 2>&1";
    const int rc = std::system(full.c_str());
    std::ifstream in(tmp);
    std::stringstream buf;
    buf << in.rdbuf();
    int code = -1;
    if (WIFEXITED(rc)) code = WEXITSTATUS(rc);
    return {code, buf.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const char* kHandScenario = R"({
  "n_periods": 2,
  "demands": [2, 2],
  "costs": {"c": 1.0, "p": 10.0, "K": 1.0},
  "reservoirs": [{"capacity": 2, "initial": 1, "levels": 3}],
  "flow": {"kind": "deterministic", "inflows": [[1, 1]]}
})";

const char* kGridScenario = R"({
  "n_periods": 12,
  "demands": [4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4],
  "costs": {"c": 1.0, "p": 5.0, "K": 2.0},
  "reservoirs": [
    {"capacity": 4, "initial": 2, "levels": 5},
    {"capacity": 2, "initial": 1, "levels": 3},
    {"capacity": 3, "initial": 1, "levels": 4}
  ],
  "flow": {"kind": "deterministic", "inflows": [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]
  ]}
})";

const char* kMarkovScenario = R"({
  "n_periods": 3,
  "demands": [2, 3, 2],
  "costs": {"c": 1.0, "p": 6.0, "K": 1.0},
  "reservoirs": [{"capacity": 3, "initial": 2, "levels": 4}],
  "flow": {"kind": "markov", "bins": [0, 1, 2], "initial": [0.25, 0.5, 0.25],
           "transitions": [
             [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]],
             [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]],
             [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]
           ]}
})";

} // namespace

int main() {
    const char* bin_env = std::getenv("HYDRODP_BIN");
    if (!bin_env) {
        std::fprintf(stderr, "HYDRODP_BIN not set\n");
        return 1;
    }
    const std::string bin = bin_env;
    const fs::path dir = fs::temp_directory_path() / "hydrodp_cli_tests";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const fs::path hand = dir / "hand.json";
    write_file(hand, kHandScenario);
    const fs::path gridsc = dir / "grid534.json";
    write_file(gridsc, kGridScenario);
    const fs::path markov = dir / "markov.json";
    write_file(markov, kMarkovScenario);

    // solve prints f1 and exits 0
    {
        const auto r = run(bin + " solve " + hand.string() + " --model single --out " +
                           (dir / "hand_out").string());
        check(r.exit_code == 0, "solve exit 0");
        check(r.out.find("1\n") != std::string::npos, "solve prints f1 = 1");
        check(fs::exists(dir / "hand_out" / "value_001.csv"), "value tables written");
        check(fs::exists(dir / "hand_out" / "policy_002.csv"), "policy tables written");
    }

    // aggregate metrics row: 60 = 5x3x4 minimizations per stage
    {
        const auto r = run(bin + " solve " + gridsc.string() + " --model aggregate --out " +
                           (dir / "grid_out").string());
        check(r.exit_code == 0, "aggregate solve exit 0");
        const std::string metrics = slurp(dir / "grid_out" / "metrics.csv");
        check(metrics.find("minimizations_per_stage,60") != std::string::npos,
              "metrics row minimizations_per_stage,60");
    }

    // parse failure -> exit 2 with a byte offset
    {
        const fs::path bad = dir / "bad.json";
        write_file(bad, "{\"n_periods\": }");
        const auto r = run(bin + " solve " + bad.string() + " --model single");
        check(r.exit_code == 2, "malformed JSON exits 2");
        check(r.out.find("byte") != std::string::npos, "parse error names the byte offset");
    }

    // validation failure -> exit 1
    {
        const fs::path bad = dir / "invalid.json";
        std::string text = kHandScenario;
        text.replace(text.find("\"p\": 10.0"), 9, "\"p\": 1.0");
        write_file(bad, text);
        const auto r = run(bin + " solve " + bad.string() + " --model single");
        check(r.exit_code == 1, "p == c exits 1");
        check(r.out.find("deficit_penalty") != std::string::npos,
              "validation names the offending field");
    }

    // model/scenario mismatch -> exit 3
    {
        const auto r = run(bin + " solve " + hand.string() + " --model markov");
        check(r.exit_code == 3, "model mismatch exits 3");
    }

    // simulate under assumed inflows reproduces f1 in the summary
    {
        const auto r = run(bin + " simulate " + hand.string() + " --policy " +
                           (dir / "hand_out").string() + " --out " + (dir / "sim_out").string());
        check(r.exit_code == 0, "simulate exit 0");
        const std::string summary = slurp(dir / "sim_out" / "summary.csv");
        check(summary.find("\n1,1,1,1,") != std::string::npos,
              "summary mean cost equals printed f1");
    }

    // --sample 0: empty summary, exit 0
    {
        const auto r = run(bin + " simulate " + hand.string() + " --policy " +
                           (dir / "hand_out").string() + " --sample 0 --seed 1 --out " +
                           (dir / "sim_zero").string());
        check(r.exit_code == 0, "simulate --sample 0 exit 0");
        const std::string summary = slurp(dir / "sim_zero" / "summary.csv");
        check(summary.find("\n0,") != std::string::npos, "empty summary row");
    }

    // seed-pinned sampling is byte-identical across runs
    {
        const auto s = run(bin + " solve " + markov.string() + " --model markov --out " +
                           (dir / "mk_out").string());
        check(s.exit_code == 0, "markov solve exit 0");
        const auto r1 = run(bin + " simulate " + markov.string() + " --policy " +
                            (dir / "mk_out").string() + " --sample 1000 --seed 7 --out " +
                            (dir / "mk_sim1").string());
        const auto r2 = run(bin + " simulate " + markov.string() + " --policy " +
                            (dir / "mk_out").string() + " --sample 1000 --seed 7 --out " +
                            (dir / "mk_sim2").string());
        check(r1.exit_code == 0 && r2.exit_code == 0, "sampled simulations exit 0");
        check(slurp(dir / "mk_sim1" / "summary.csv") == slurp(dir / "mk_sim2" / "summary.csv"),
              "summary.csv byte-identical across seeded runs");
        check(slurp(dir / "mk_sim1" / "trace_0042.csv") ==
                  slurp(dir / "mk_sim2" / "trace_0042.csv"),
              "trace files byte-identical across seeded runs");
    }

    // compare: one reservoir degenerates to gap 0
    {
        const auto r = run(bin + " compare " + hand.string() + " --out " +
                           (dir / "cmp_out").string());
        check(r.exit_code == 0, "compare exit 0");
        const std::string csv = slurp(dir / "cmp_out" / "compare.csv");
        check(csv.find("aggregate,") != std::string::npos, "compare.csv has aggregate row");
        check(csv.find(",0,ok") != std::string::npos, "one-reservoir relative gap is 0");
    }

    // simulate with a policy bundle from a different scenario shape -> exit 3
    {
        const auto r = run(bin + " simulate " + markov.string() + " --policy " +
                           (dir / "hand_out").string() + " --sample 5 --seed 1 --out " +
                           (dir / "sim_bad").string());
        check(r.exit_code == 3, "policy/scenario mismatch exits 3");
    }

    // compare on a two-reservoir chain: aggregate never beats the exact solve
    {
        const fs::path chain = dir / "chain2.json";
        write_file(chain, R"({
          "n_periods": 3,
          "demands": [9, 9, 9],
          "costs": {"c": 1.0, "p": 6.0, "K": 1.0, "a": [1, 1, 1]},
          "reservoirs": [
            {"capacity": 2, "initial": 1, "levels": 3},
            {"capacity": 3, "initial": 2, "levels": 4}
          ],
          "flow": {"kind": "deterministic", "inflows": [[1, 0, 1], [1, 1, 0]]}
        })");
        const auto r = run(bin + " compare " + chain.string() + " --out " +
                           (dir / "cmp_chain").string());
        check(r.exit_code == 0, "two-reservoir compare exit 0");
        const std::string csv = slurp(dir / "cmp_chain" / "compare.csv");
        const std::size_t pos = csv.find("\naggregate,");
        bool gap_ok = false;
        if (pos != std::string::npos) {
            // model,f1,minimizations,wall_ms,rel_gap,status
            std::stringstream row(csv.substr(pos + 1));
            std::string cell;
            for (int col = 0; std::getline(row, cell, ','); ++col)
                if (col == 4) gap_ok = !cell.empty() && std::stod(cell) >= -1e-9;
        }
        check(gap_ok, "two-reservoir relative gap is non-negative");

        // simulate the exact chain policy under its own inflows
        const auto sv = run(bin + " solve " + chain.string() + " --model multi --out " +
                            (dir / "chain_out").string());
        check(sv.exit_code == 0, "chain solve exit 0");
        const double f1 = std::stod(sv.out);
        const auto sim = run(bin + " simulate " + chain.string() + " --policy " +
                             (dir / "chain_out").string() + " --out " +
                             (dir / "chain_sim").string());
        check(sim.exit_code == 0, "chain simulate exit 0");
        const std::string summary = slurp(dir / "chain_sim" / "summary.csv");
        bool mean_ok = false;
        const std::size_t nl = summary.find('\n');
        if (nl != std::string::npos) {
            std::stringstream row(summary.substr(nl + 1));
            std::string cell;
            for (int col = 0; std::getline(row, cell, ','); ++col)
                if (col == 1) mean_ok = std::abs(std::stod(cell) - f1) <= 1e-9;
        }
        check(mean_ok, "chain simulate mean cost equals printed f1");
    }

    // compare: four reservoirs skip the exact solve
    {
        const fs::path big = dir / "big.json";
        write_file(big, R"({
          "n_periods": 2,
          "demands": [2, 2],
          "costs": {"c": 1.0, "p": 5.0, "K": 1.0},
          "reservoirs": [
            {"capacity": 1, "initial": 0, "levels": 2},
            {"capacity": 1, "initial": 0, "levels": 2},
            {"capacity": 1, "initial": 0, "levels": 2},
            {"capacity": 1, "initial": 1, "levels": 2}
          ],
          "flow": {"kind": "deterministic", "inflows": [[1,0],[0,1],[1,0],[0,1]]}
        })");
        const auto r = run(bin + " compare " + big.string() + " --out " +
                           (dir / "cmp_big").string());
        check(r.exit_code == 0, "compare with 4 reservoirs exit 0");
        const std::string csv = slurp(dir / "cmp_big" / "compare.csv");
        check(csv.find("skipped: dimensionality") != std::string::npos,
              "exact row marked skipped: dimensionality");
    }

    // oracle agreement and budget refusal
    {
        const auto r = run(bin + " oracle " + hand.string() + " --model single");
        check(r.exit_code == 0, "oracle exit 0 on agreement");
        check(r.out.find("abs_diff 0") != std::string::npos, "oracle abs_diff 0");
        const auto rb = run(bin + " oracle " + hand.string() + " --model single --budget 2");
        check(rb.exit_code == 3, "oracle budget refusal exits 3");
    }

    if (g_failures == 0) fs::remove_all(dir);
    std::printf("%s (%d failures)\n", g_failures == 0 ? "CLI TESTS PASSED" : "CLI TESTS FAILED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
