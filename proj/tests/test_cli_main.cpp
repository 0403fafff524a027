// End-to-end checks of the ehk binary: exit codes, report files, offline
// behavior. Plain asserts; any failure aborts with a message.

#include <cassert>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ehk/fsutil.hpp"

namespace fs = std::filesystem;

namespace {

int exit_code_of(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

struct Workspace {
    fs::path dir;
    fs::path config;

    explicit Workspace(const std::string& tag) {
        dir = fs::temp_directory_path() / ("ehk_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        const fs::path src(EHK_SOURCE_DIR);
        fs::copy(src / "fixtures" / "corpus6", dir / "corpus6",
                 fs::copy_options::recursive);
        fs::copy(src / "fixtures" / "replay", dir / "replay", fs::copy_options::recursive);

        nlohmann::json j;
        j["corpus_root"] = "corpus6";
        j["output_dir"] = "out/reports";
        j["cache_dir"] = "out/cache";
        j["session_root"] = "out";
        j["data_dir"] = (src / "data").string();
        j["seed"] = 42;
        j["aggregation_mode"] = "mean_similarity";
        j["embed"] = {{"backend", "mock"}, {"dim", 64}, {"cache", true}};
        j["models"] = {
            {"gemini-2.5-flash", {{"kind", "replay"}, {"fixture", "replay/gemini-2.5-flash.json"}}},
            {"gemini-2.5-pro", {{"kind", "replay"}, {"fixture", "replay/gemini-2.5-pro.json"}}},
            {"stacked-cnn",
             {{"kind", "stacked"}, {"perception_fixture", "replay/stacked-perception.json"}}},
            {"session-er", {{"kind", "replay"}, {"fixture", "replay/session-er.json"}}}};
        j["study1"] = {{"model_ids", {"gemini-2.5-flash", "gemini-2.5-pro", "stacked-cnn"}},
                       {"min_annotations", 3}};
        j["ablation"] = {{"classifier_model", "gemini-2.5-flash"},
                         {"baseline_model", "stacked-cnn"}};
        j["session"] = {{"er_model", "session-er"}, {"apology_model", "session-er"}};
        config = dir / "config.json";
        ehk::atomic_write_file(config, j.dump(2));
    }

    std::string cli(const std::string& args) const {
        return std::string(EHK_CLI_PATH) + " " + args + " --config " + config.string() +
               " > " + (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
    }

    std::string stdout_text() const { return ehk::read_file_bytes(dir / "stdout.txt"); }
    std::string stderr_text() const { return ehk::read_file_bytes(dir / "stderr.txt"); }
};

void expect(bool ok, const std::string& what, const Workspace& ws) {
    if (!ok) {
        std::cerr << "FAILED: " << what << "\nstdout:\n" << ws.stdout_text() << "\nstderr:\n"
                  << ws.stderr_text() << "\n";
        std::exit(1);
    }
}

} // namespace

int main() {
    // validate: clean fixture exits 0
    {
        Workspace ws("validate");
        expect(exit_code_of(ws.cli("validate")) == 0, "validate exits 0 on clean corpus", ws);
        expect(ws.stdout_text().find("episodes: 6") != std::string::npos,
               "validate prints counts", ws);
        expect(exit_code_of(ws.cli("validate --strict-media")) == 0,
               "strict media validation passes", ws);
    }

    // validate: missing file exits 2 naming the file
    {
        Workspace ws("missing");
        fs::remove(ws.dir / "corpus6" / "annotations.csv");
        expect(exit_code_of(ws.cli("validate")) == 2, "missing annotations.csv exits 2", ws);
        expect(ws.stderr_text().find("annotations.csv") != std::string::npos,
               "error names the missing file", ws);
    }

    // validate: an episode below the minimum exits 1 with the issue list
    {
        Workspace ws("below_min");
        // E02 keeps only two annotations
        const auto path = ws.dir / "corpus6" / "annotations.csv";
        std::istringstream in(ehk::read_file_bytes(path));
        std::ostringstream out;
        std::string line;
        int dropped = 0;
        while (std::getline(in, line)) {
            if (line.rfind("E02,A06", 0) == 0 && dropped == 0) {
                ++dropped;
                continue;
            }
            out << line << "\n";
        }
        ehk::atomic_write_file(path, out.str());
        expect(exit_code_of(ws.cli("validate")) == 1, "validation issues exit 1", ws);
        expect(ws.stdout_text().find("E02") != std::string::npos, "issue names the episode", ws);
    }

    // eval --study1 --offline writes reports and exits 0
    {
        Workspace ws("study1");
        expect(exit_code_of(ws.cli("eval --study1 --offline")) == 0, "study1 offline runs", ws);
        const auto out = ws.stdout_text();
        const auto pos = out.find("out/reports/");
        expect(pos != std::string::npos, "study1 prints written files", ws);
        // the run directory is deterministic for this config
        bool found_md = false;
        for (const auto& entry : fs::recursive_directory_iterator(ws.dir / "out" / "reports")) {
            if (entry.path().filename() == "study1.md") found_md = true;
        }
        expect(found_md, "study1.md exists", ws);

        // repeated run: byte-identical reports
        std::map<fs::path, std::string> before;
        for (const auto& entry : fs::recursive_directory_iterator(ws.dir / "out" / "reports")) {
            if (entry.is_regular_file()) {
                before[entry.path()] = ehk::read_file_bytes(entry.path());
            }
        }
        expect(exit_code_of(ws.cli("eval --study1 --offline")) == 0, "study1 rerun", ws);
        for (const auto& [path, bytes] : before) {
            expect(ehk::read_file_bytes(path) == bytes, "report bytes stable across reruns", ws);
        }
    }

    // eval --ablation and --study2 after simulating sessions
    {
        Workspace ws("full");
        expect(exit_code_of(ws.cli("eval --ablation --offline")) == 0, "ablation runs", ws);
        // one simulated session per condition for three participants
        for (const std::string pid : {"S01", "S02", "S03"}) {
            for (const std::string condition : {"success", "control", "ea"}) {
                expect(exit_code_of(ws.cli("session --simulate --participant " + pid +
                                           " --condition " + condition)) == 0,
                       "session " + pid + "/" + condition, ws);
            }
        }
        expect(fs::exists(ws.dir / "out" / "study2" / "sessions" / "S02" / "ea.jsonl"),
               "session log file in the documented layout", ws);
        expect(exit_code_of(ws.cli("eval --study2 --offline")) == 0, "study2 runs", ws);
        bool found = false;
        for (const auto& entry : fs::recursive_directory_iterator(ws.dir / "out" / "reports")) {
            if (entry.path().filename() == "study2.md") found = true;
        }
        expect(found, "study2.md exists", ws);

        // cache subcommands
        expect(exit_code_of(ws.cli("cache ls")) == 0, "cache ls", ws);
        expect(exit_code_of(ws.cli("cache verify")) == 0, "cache verify clean", ws);
        // corrupt one entry, verify flags it, gc removes it
        bool corrupted = false;
        for (const auto& entry : fs::recursive_directory_iterator(ws.dir / "out" / "cache")) {
            if (entry.is_regular_file() && !corrupted) {
                ehk::atomic_write_file(entry.path(), "{broken");
                corrupted = true;
            }
        }
        expect(corrupted, "found a cache entry to corrupt", ws);
        expect(exit_code_of(ws.cli("cache verify")) == 1, "cache verify flags corruption", ws);
        expect(exit_code_of(ws.cli("cache gc")) == 0, "cache gc", ws);
        expect(exit_code_of(ws.cli("cache verify")) == 0, "cache verify clean after gc", ws);
    }

    // sessions per condition: model call counts and the fixed apology
    {
        Workspace ws("sessions");
        expect(exit_code_of(ws.cli("session --simulate --participant P01 --condition ea")) == 0,
               "ea session", ws);
        expect(ws.stdout_text().find("model_calls=2") != std::string::npos,
               "ea logs two model calls", ws);
        expect(exit_code_of(ws.cli("session --simulate --participant P01 --condition success")) ==
                   0,
               "success session", ws);
        expect(ws.stdout_text().find("model_calls=0") != std::string::npos,
               "success logs zero model calls", ws);
        expect(exit_code_of(ws.cli("session --simulate --participant P01 --condition control")) ==
                   0,
               "control session", ws);
        expect(ws.stdout_text().find("Apologies for the delay; here are your items.") !=
                   std::string::npos,
               "control apology is the fixed text", ws);
    }

    // offline cache miss exits 3 listing missing keys
    {
        Workspace ws("offline_miss");
        // a remote model with no cache prefill
        auto config = nlohmann::json::parse(ehk::read_file_bytes(ws.config));
        config["models"]["remote-vlm"] = {{"kind", "remote"},
                                          {"endpoint", "http://127.0.0.1:1"}};
        config["study1"]["model_ids"] = {"gemini-2.5-flash", "gemini-2.5-pro", "remote-vlm"};
        ehk::atomic_write_file(ws.config, config.dump(2));
        expect(exit_code_of(ws.cli("eval --study1 --offline")) == 3,
               "offline cache miss exits 3", ws);
        expect(ws.stderr_text().find("remote-vlm/E01") != std::string::npos,
               "missing keys are listed", ws);
    }

    // offline with a remote embedding backend and an empty cache exits 3
    {
        Workspace ws("offline_embed");
        auto config = nlohmann::json::parse(ehk::read_file_bytes(ws.config));
        config["embed"] = {{"backend", "remote"}, {"dim", 8},
                           {"endpoint", "http://127.0.0.1:1"}, {"cache", true}};
        ehk::atomic_write_file(ws.config, config.dump(2));
        expect(exit_code_of(ws.cli("eval --study1 --offline")) == 3,
               "offline embed cache miss exits 3", ws);
        expect(ws.stderr_text().find("no cached embedding") != std::string::npos,
               "embed miss names the key", ws);
    }

    // --seed overrides the config seed and therefore the run id
    {
        Workspace ws("seed");
        expect(exit_code_of(ws.cli("eval --study1 --offline")) == 0, "base run", ws);
        const auto base_out = ws.stdout_text();
        expect(exit_code_of(ws.cli("eval --study1 --offline --seed 99")) == 0, "seeded run", ws);
        const auto seeded_out = ws.stdout_text();
        auto run_dir_of = [](const std::string& text) {
            const auto pos = text.find("out/reports/");
            const auto end = text.find('/', pos + 12);
            return text.substr(pos, end - pos);
        };
        expect(run_dir_of(base_out) != run_dir_of(seeded_out),
               "seed override changes the run id", ws);
    }

    std::cout << "cli tests passed\n";
    return 0;
}
