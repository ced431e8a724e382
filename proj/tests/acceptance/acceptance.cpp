// Acceptance runner: one PASS/FAIL line per criterion.  Exit status is 0 only
// when every selected criterion passes.
//
//   acceptance [--seed N] [--threads N] [--only 3,5]

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vim/verify.hpp"

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    vim::VerifyOptions opt;
    std::vector<int> only;
    app.add_option("--seed", opt.seed, "base seed");
    app.add_option("--threads", opt.threads, "worker threads (0 = all cores)");
    app.add_option("--only", only, "criterion ids")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    vim::verify::run(opt, only, [&](const vim::CheckResult& r) {
        all = all && r.pass;
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str(), r.seconds);
        std::fflush(stdout);
    });
    return all ? 0 : 1;
}
