#include "piano/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace piano {

using nlohmann::json;

void RunConfig::validate() const {
    std::vector<std::string> problems;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) problems.push_back(msg);
    };

    if (scenario.kind != "mixed") {
        try {
            scenario_kind_from_string(scenario.kind);
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
    }
    check(scenario.height >= 16 && scenario.width >= 16, "scenario: grid must be at least 16x16");
    check(scenario.height % 4 == 0 && scenario.width % 4 == 0,
          "scenario: grid dims must be divisible by 4 (operator pooling)");
    check(scenario.n_frames >= 9, "scenario: n_frames must be >= 9");
    check(scenario.count >= 1, "scenario: count must be >= 1");
    check(scenario.eval_count >= 1, "scenario: eval_count must be >= 1");
    check(tno.s >= 1 && tno.s == vno.s, "model: tno.s and vno.s must match and be >= 1");
    check(!tno.hidden.empty() && !vno.hidden.empty(), "model: hidden widths must be non-empty");
    check(vno.v_max > 0.0, "model: v_max must be > 0");
    check(scenario.n_frames >= 2 * tno.s + 1,
          "scenario: n_frames must be >= 2*s+1 to cut training windows");
    check(train.alpha >= 0.0, "train: alpha must be >= 0");
    check(train.lr >= 0.0, "train: lr must be >= 0");
    check(train.steps >= 1, "train: steps must be >= 1");
    check(train.batch >= 1, "train: batch must be >= 1");
    check(eval.s >= 1 && eval.s <= tno.s, "eval: s must be in [1, tno.s]");
    for (double t : eval.thresholds)
        check(t > 0.0, "eval: thresholds must be > 0");
    check(!sweep_alphas.empty(), "sweep: need at least one alpha");
    for (double a : sweep_alphas)
        check(a >= 0.0, "sweep: alphas must be >= 0");

    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid configuration (" << problems.size() << " problem(s)):";
        for (const std::string& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }

    RunConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("scenario")) {
            const json& s = j["scenario"];
            cfg.scenario.kind = s.value("kind", cfg.scenario.kind);
            cfg.scenario.height = s.value("height", cfg.scenario.height);
            cfg.scenario.width = s.value("width", cfg.scenario.width);
            cfg.scenario.n_frames = s.value("n_frames", cfg.scenario.n_frames);
            cfg.scenario.count = s.value("count", cfg.scenario.count);
            cfg.scenario.eval_count = s.value("eval_count", cfg.scenario.eval_count);
        }
        if (j.contains("model")) {
            const json& m = j["model"];
            const int s = m.value("s", cfg.tno.s);
            cfg.tno.s = s;
            cfg.vno.s = s;
            const int c = m.value("channels", cfg.tno.channels);
            cfg.tno.channels = c;
            cfg.vno.channels = c;
            cfg.translator.channels = c;
            if (m.contains("tno_hidden")) cfg.tno.hidden = m["tno_hidden"].get<std::vector<int>>();
            if (m.contains("vno_hidden")) cfg.vno.hidden = m["vno_hidden"].get<std::vector<int>>();
            cfg.vno.v_max = m.value("v_max", cfg.vno.v_max);
            cfg.translator.hidden = m.value("translator_hidden", cfg.translator.hidden);
        }
        if (j.contains("train")) {
            const json& t = j["train"];
            cfg.train.alpha = t.value("alpha", cfg.train.alpha);
            cfg.train.lr = t.value("lr", cfg.train.lr);
            cfg.train.steps = t.value("steps", cfg.train.steps);
            cfg.train.batch = t.value("batch", cfg.train.batch);
            cfg.train.seam_pair = t.value("seam_pair", cfg.train.seam_pair);
        }
        cfg.train.seed = cfg.seed;
        if (j.contains("eval")) {
            const json& e = j["eval"];
            if (e.contains("thresholds"))
                cfg.eval.thresholds = e["thresholds"].get<std::vector<double>>();
            cfg.eval.s = e.value("s", cfg.eval.s);
        }
        if (j.contains("paths")) {
            const json& p = j["paths"];
            cfg.paths.data = p.value("data", cfg.paths.data);
            cfg.paths.checkpoints = p.value("checkpoints", cfg.paths.checkpoints);
            cfg.paths.reports = p.value("reports", cfg.paths.reports);
        }
        if (j.contains("sweep_alphas"))
            cfg.sweep_alphas = j["sweep_alphas"].get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError("config type error in " + path.string() + ": " + e.what());
    }

    cfg.validate();
    return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["scenario"] = {{"kind", cfg.scenario.kind},       {"height", cfg.scenario.height},
                     {"width", cfg.scenario.width},     {"n_frames", cfg.scenario.n_frames},
                     {"count", cfg.scenario.count},     {"eval_count", cfg.scenario.eval_count}};
    j["model"] = {{"s", cfg.tno.s},
                  {"channels", cfg.tno.channels},
                  {"tno_hidden", cfg.tno.hidden},
                  {"vno_hidden", cfg.vno.hidden},
                  {"v_max", cfg.vno.v_max},
                  {"translator_hidden", cfg.translator.hidden}};
    j["train"] = {{"alpha", cfg.train.alpha}, {"lr", cfg.train.lr},
                  {"steps", cfg.train.steps}, {"batch", cfg.train.batch},
                  {"seam_pair", cfg.train.seam_pair}};
    j["eval"] = {{"thresholds", cfg.eval.thresholds}, {"s", cfg.eval.s}};
    j["paths"] = {{"data", cfg.paths.data},
                  {"checkpoints", cfg.paths.checkpoints},
                  {"reports", cfg.paths.reports}};
    j["sweep_alphas"] = cfg.sweep_alphas;
    return j.dump(2) + "\n";
}

} // namespace piano
