#include <cstdint>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gliomkit/cli.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "JSON config file");
    sub->add_option("--out", flags.out_dir, "output directory")->required();
    sub->add_option("--seed", flags.seed, "seed override")
        ->each([&flags](const std::string&) { flags.seed_given = true; });
    sub->add_option("--threads", flags.threads, "worker pool size (1 = bit-exact serial)")
        ->check(CLI::PositiveNumber);
}

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw gliomkit::io_error(gliomkit::concat("cannot open config: ", path));
    return nlohmann::json::parse(in);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"glioma segmentation, radiomics and survival toolkit"};
    app.require_subcommand(1);

    const char* commands[] = {"seg-train", "seg-predict", "seg-eval",    "features", "surv-train",
                              "surv-predict", "surv-eval", "surv-cv", "phantom-gen"};
    std::map<std::string, CommonFlags> flags;
    for (const char* name : commands) {
        auto* sub = app.add_subcommand(name);
        add_common(sub, flags[name]);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().at(0)->get_name();
    const CommonFlags& f = flags[command];
    try {
        gliomkit::cli::RunContext ctx;
        ctx.out_dir = f.out_dir;
        ctx.seed = f.seed;
        ctx.seed_overridden = f.seed_given;
        ctx.threads = f.threads;
        return gliomkit::cli::run_command(command, load_config(f.config_path), ctx);
    } catch (const std::exception& e) {
        std::cerr << "gliomkit: " << e.what() << "\n";
        return 1;
    }
}
