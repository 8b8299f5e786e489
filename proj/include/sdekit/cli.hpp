#pragma once

// Command-line interface tying the library together: simulate, calibrate,
// discover, risk, backtest, baseline, and report subcommands over the price
// CSV / news JSON / run-config formats.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdekit/agents.hpp"
#include "sdekit/backtest.hpp"
#include "sdekit/benchmark.hpp"
#include "sdekit/calibrate.hpp"
#include "sdekit/config.hpp"
#include "sdekit/data.hpp"
#include "sdekit/discovery.hpp"
#include "sdekit/http_transport.hpp"
#include "sdekit/llm.hpp"
#include "sdekit/model.hpp"
#include "sdekit/proposer.hpp"
#include "sdekit/report.hpp"
#include "sdekit/risk.hpp"
#include "sdekit/simulate.hpp"

namespace sdekit {

// Exit codes, also listed in --help.
enum CliExit : int {
    kExitOk = 0,
    kExitUnexpected = 1,
    kExitUsage = 2,
    kExitDataError = 3,
    kExitModelParseError = 4,
    kExitSimulationError = 5,
    kExitDiscoveryError = 6,
    kExitAgentError = 7,
    kExitLookaheadError = 8,
    kExitInvalidArgument = 9,
};

namespace cli_detail {

// Values shared by every subcommand, resolved from flags + config + env.
struct Shared {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> iterations;
    std::string endpoint;  // --llm-endpoint, falling back to $LLM_ENDPOINT
    bool offline = false;

    [[nodiscard]] RunConfig resolve() const {
        RunConfig run = config_path ? load_run_config(*config_path) : RunConfig{};
        if (seed) run.seed = *seed;
        if (iterations) run.iterations = *iterations;
        if (!endpoint.empty()) run.agent.endpoint = endpoint;
        if (const char* key = std::getenv("LLM_API_KEY"); key && run.agent.api_key.empty())
            run.agent.api_key = key;
        if (const char* model = std::getenv("LLM_MODEL");
            model && run.agent.model == "default")
            run.agent.model = model;
        if (offline) run.agent.endpoint.clear();
        run.backtest.seed = run.seed;
        run.backtest.symbol = run.symbol;
        run.backtest.calib = run.calib;
        run.backtest.risk = run.risk;
        run.backtest.discovery.iterations = run.iterations;
        run.backtest.discovery.retry_budget = run.retry_budget;
        run.backtest.discovery.calib = run.calib;
        run.backtest.discovery.scorer = run.scorer;
        return run;
    }

    [[nodiscard]] bool online(const RunConfig& run) const {
        return !offline && !run.agent.endpoint.empty();
    }
};

// "a=0.05,b=0.2" -> values ordered like model.param_names; every parameter
// must be given exactly once.
inline std::vector<double> parse_param_list(const std::string& text, const SdeModel& m) {
    std::map<std::string, double> given;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("params: expected name=value, got \"" + item + "\"");
        const std::string name = item.substr(0, eq);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::invalid_argument("params: malformed value in \"" + item + "\"");
        }
        if (!given.emplace(name, value).second)
            throw std::invalid_argument("params: duplicate parameter \"" + name + "\"");
    }
    std::vector<double> theta;
    theta.reserve(m.param_names.size());
    for (const std::string& name : m.param_names) {
        auto it = given.find(name);
        if (it == given.end())
            throw std::invalid_argument("params: missing parameter \"" + name + "\" (model needs " +
                                        std::to_string(m.n_params()) + ")");
        theta.push_back(it->second);
        given.erase(it);
    }
    if (!given.empty())
        throw std::invalid_argument("params: unknown parameter \"" + given.begin()->first +
                                    "\"");
    return theta;
}

inline std::string format_params(const SdeModel& m, std::span<const double> theta) {
    std::string out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (i) out += ", ";
        out += m.param_names[i] + "=" + detail::render_number(theta[i]);
    }
    return out;
}

inline std::vector<double> load_closes(const std::string& path) {
    return load_prices(path).closes;
}

// The discovery proposers and critics for one run; owns the transport.
struct AgentStack {
    std::unique_ptr<Transport> transport;
    std::unique_ptr<ModelProposer> proposer;
    AgentConfig agent_config;
    bool is_online = false;
};

inline AgentStack make_agent_stack(const Shared& shared, const RunConfig& run) {
    AgentStack stack;
    stack.agent_config.request = run.agent.to_request();
    stack.agent_config.prompt_dir = run.agent.prompt_dir;
    if (shared.online(run)) {
        stack.is_online = true;
        stack.transport = std::make_unique<HttpTransport>();
        stack.proposer = std::make_unique<LlmProposer>(*stack.transport, stack.agent_config);
    } else {
        // Offline runs must perform zero network activity; any stray request
        // through this transport throws instead of reaching the network.
        stack.transport = std::make_unique<FailTransport>();
        stack.proposer = std::make_unique<PoolProposer>();
    }
    return stack;
}

inline DiscoveryConfig make_discovery_config(const RunConfig& run, const AgentStack& stack) {
    DiscoveryConfig dc;
    dc.iterations = run.iterations;
    dc.retry_budget = run.retry_budget;
    dc.calib = run.calib;
    dc.scorer = run.scorer;
    dc.seed = run.seed;
    if (stack.is_online) {
        Transport* transport = stack.transport.get();
        AgentConfig agent = stack.agent_config;
        dc.novelty = [transport, agent](const SdeModel& m,
                                        const std::vector<SdeModel>& tested) {
            std::string memory;
            for (const SdeModel& t : tested) memory += "- " + render_model(t) + "\n";
            if (memory.empty()) memory = "(none yet)\n";
            LlmResponse reply =
                run_agent(*transport, agent, "scorer",
                          {{"model", render_model(m)},
                           {"memory_digest", memory},
                           {"metrics_digest", "(pending evaluation)"}});
            return parse_novelty(reply.text);
        };
        dc.summarize = [transport, agent](const CandidateRecord& rec) {
            std::string metrics = "loss " + detail::render_number(rec.loss);
            if (rec.ok()) {
                metrics += ", KS " + detail::render_number(rec.comparison.ks_statistic);
                metrics += ", MAPE " + detail::render_number(rec.comparison.mape);
            }
            std::string params;
            for (double v : rec.fitted_params) {
                if (!params.empty()) params += ", ";
                params += detail::render_number(v);
            }
            if (params.empty()) params = "(none)";
            LlmResponse reply = run_agent(*transport, agent, "summarizer",
                                          {{"model", rec.source},
                                           {"params", params},
                                           {"metrics_digest", metrics}});
            return reply.text;
        };
    }
    return dc;
}

inline void print_record_line(std::ostream& out, const CandidateRecord& rec) {
    out << "iter " << rec.iteration << "  " << to_string(rec.status) << "  " << rec.source;
    if (rec.ok())
        out << "  loss=" << detail::render_number(rec.loss) << "  score=" << rec.combined;
    out << '\n';
}

inline nlohmann::json risk_to_json(const RiskReport& rep, const RiskConfig& rc) {
    nlohmann::json j;
    j["alpha"] = rc.alpha;
    j["horizon"] = rc.horizon;
    j["n_paths"] = rc.n_paths;
    j["var"] = rep.var;
    j["cvar"] = rep.cvar;
    j["mdd"] = rep.mdd;
    if (rep.evt_var) j["evt_var"] = *rep.evt_var;
    if (rep.evt_cvar) j["evt_cvar"] = *rep.evt_cvar;
    if (rep.gpd_losses) {
        j["gpd_losses"] = {{"xi", rep.gpd_losses->xi},
                           {"gamma", rep.gpd_losses->gamma},
                           {"threshold", rep.gpd_losses->threshold},
                           {"n_exceedances", rep.gpd_losses->n_exceedances}};
    }
    if (rep.residual_mean) j["residual_mean"] = *rep.residual_mean;
    if (rep.residual_stddev) j["residual_stddev"] = *rep.residual_stddev;
    return j;
}

inline void print_risk_report(std::ostream& out, const RiskReport& rep, const RiskConfig& rc) {
    out << "horizon: " << rc.horizon << " steps, alpha: " << rc.alpha
        << ", paths: " << rc.n_paths << '\n';
    out << "VaR:  " << detail::render_number(rep.var) << '\n';
    out << "CVaR: " << detail::render_number(rep.cvar) << '\n';
    out << "MDD (mean over paths): " << detail::render_number(rep.mdd) << '\n';
    if (rep.evt_var)
        out << "EVT VaR:  " << detail::render_number(*rep.evt_var) << '\n';
    else
        out << "EVT VaR:  unavailable (tail too small)\n";
    if (rep.evt_cvar) out << "EVT CVaR: " << detail::render_number(*rep.evt_cvar) << '\n';
    if (rep.gpd_losses)
        out << "GPD loss tail: xi=" << detail::render_number(rep.gpd_losses->xi)
            << " gamma=" << detail::render_number(rep.gpd_losses->gamma)
            << " exceedances=" << rep.gpd_losses->n_exceedances << '\n';
    if (rep.residual_mean && rep.residual_stddev)
        out << "fit residuals: mean=" << detail::render_number(*rep.residual_mean)
            << " stddev=" << detail::render_number(*rep.residual_stddev) << '\n';
}

inline void print_perf_line(std::ostream& out, const char* label, const BacktestResult& res) {
    out << label << ": pnl=" << detail::render_number(res.perf.pnl)
        << " sharpe=" << detail::render_number(res.perf.sharpe)
        << " mdd=" << detail::render_number(res.perf.mdd)
        << " final=" << detail::render_number(res.equity.empty() ? 0.0 : res.equity.back())
        << '\n';
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
    using cli_detail::Shared;

    CLI::App app{
        "sdekit: discover, calibrate, and trade on stochastic differential equation "
        "models of price series"};
    app.require_subcommand(1);
    app.footer(
        "Exit codes:\n"
        "  0  success\n"
        "  1  unexpected error\n"
        "  2  usage error\n"
        "  3  data or config file error\n"
        "  4  model text parse error\n"
        "  5  simulation failure\n"
        "  6  discovery failure\n"
        "  7  agent or transport failure\n"
        "  8  lookahead violation\n"
        "  9  invalid module argument\n"
        "\n"
        "Environment: LLM_ENDPOINT, LLM_API_KEY, LLM_MODEL supply agent settings\n"
        "when the corresponding flags/config keys are absent.");

    auto shared = std::make_shared<Shared>();
    app.add_option("--config", shared->config_path, "Run configuration JSON file");
    app.add_option("--seed", shared->seed, "Root RNG seed (overrides config)");
    app.add_option("--iterations", shared->iterations,
                   "Discovery iterations (default 15; overrides config)");
    app.add_option("--llm-endpoint", shared->endpoint, "LLM chat-completions endpoint URL")
        ->envname("LLM_ENDPOINT");
    app.add_flag("--offline", shared->offline,
                 "Force mock agents; no network activity is performed");

    // --- simulate -------------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate an SDE model ensemble to CSV");
    sim_cmd->fallthrough();
    auto sim_model = std::make_shared<std::string>();
    auto sim_params = std::make_shared<std::string>();
    auto sim_s0 = std::make_shared<std::optional<double>>();
    auto sim_horizon = std::make_shared<std::optional<std::size_t>>();
    auto sim_paths = std::make_shared<std::optional<std::size_t>>();
    auto sim_dt = std::make_shared<std::optional<double>>();
    auto sim_out = std::make_shared<std::string>("-");
    sim_cmd->add_option("model", *sim_model, "Model text, e.g. \"dS = a*S dt + b*S dW\"")
        ->required();
    sim_cmd->add_option("--params", *sim_params, "Parameter list, e.g. a=0.05,b=0.2");
    sim_cmd->add_option("--s0", *sim_s0, "Initial price (default 100)");
    sim_cmd->add_option("--horizon", *sim_horizon, "Euler steps (default 252)");
    sim_cmd->add_option("--paths", *sim_paths, "Number of Monte Carlo paths (default 1000)");
    sim_cmd->add_option("--dt", *sim_dt, "Time step in years (default 1/252)");
    sim_cmd->add_option("--output", *sim_out, "Output CSV path, or - for stdout");
    sim_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        SdeModel m = parse_model(*sim_model);
        std::vector<double> theta = cli_detail::parse_param_list(*sim_params, m);
        SimConfig sc = run.sim;
        if (*sim_s0) sc.s0 = **sim_s0;
        if (*sim_horizon) sc.horizon = **sim_horizon;
        if (*sim_paths) sc.n_paths = **sim_paths;
        if (*sim_dt) sc.dt = **sim_dt;
        sc.seed = run.seed;
        Ensemble ens = simulate(m, theta, sc);

        std::ofstream file;
        const bool to_stdout = *sim_out == "-";
        if (!to_stdout) {
            file.open(*sim_out);
            if (!file) throw std::runtime_error(*sim_out + ": cannot open for writing");
        }
        std::ostream& out = to_stdout ? std::cout : file;
        out << "step,t";
        for (std::size_t p = 0; p < ens.paths.size(); ++p) out << ",path_" << p;
        out << '\n';
        for (std::size_t k = 0; k <= sc.horizon; ++k) {
            out << k << ',' << detail::render_number(ens.t0 + static_cast<double>(k) * ens.dt);
            for (const auto& path : ens.paths) out << ',' << detail::render_number(path[k]);
            out << '\n';
        }
        if (!to_stdout)
            std::cout << "ensemble CSV written to " << *sim_out << " (" << ens.paths.size()
                      << " paths, " << sc.horizon << " steps)\n";
    });

    // --- calibrate ------------------------------------------------------------
    auto* cal_cmd =
        app.add_subcommand("calibrate", "Fit model parameters to a historical price CSV");
    cal_cmd->fallthrough();
    auto cal_model = std::make_shared<std::string>();
    auto cal_data = std::make_shared<std::string>();
    auto cal_init = std::make_shared<std::string>();
    auto cal_max_iters = std::make_shared<std::optional<int>>();
    auto cal_eta = std::make_shared<std::optional<double>>();
    auto cal_out = std::make_shared<std::string>();
    cal_cmd->add_option("model", *cal_model, "Model text")->required();
    cal_cmd->add_option("--data", *cal_data, "Price CSV (date,close)")->required();
    cal_cmd->add_option("--init", *cal_init,
                        "Initial parameters, e.g. a=0.1,b=0.3 (default: data-driven)");
    cal_cmd->add_option("--max-iters", *cal_max_iters, "Gradient-descent iteration cap");
    cal_cmd->add_option("--eta", *cal_eta, "Gradient-descent learning rate");
    cal_cmd->add_option("--output", *cal_out, "Write the fit as JSON to this path");
    cal_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        SdeModel m = parse_model(*cal_model);
        std::vector<double> closes = cli_detail::load_closes(*cal_data);
        std::vector<double> init = cal_init->empty()
                                       ? default_init(m, mean(closes))
                                       : cli_detail::parse_param_list(*cal_init, m);
        CalibConfig cc = run.calib;
        if (*cal_max_iters) cc.max_iters = **cal_max_iters;
        if (*cal_eta) cc.eta = **cal_eta;
        cc.seed = run.seed;
        CalibResult res = calibrate(m, closes, init, cc);

        std::cout << "model: " << render_model(m) << '\n';
        std::cout << "observations: " << closes.size() << '\n';
        std::cout << "loss: " << detail::render_number(res.loss) << '\n';
        std::cout << "converged: " << (res.converged ? "yes" : "no") << " ("
                  << (res.trace.empty() ? 0 : res.trace.size() - 1) << " accepted steps)\n";
        std::cout << "params: " << cli_detail::format_params(m, res.params) << '\n';
        if (!cal_out->empty()) {
            nlohmann::json j;
            j["model"] = render_model(m);
            j["loss"] = res.loss;
            j["converged"] = res.converged;
            for (std::size_t i = 0; i < res.params.size(); ++i)
                j["params"][m.param_names[i]] = res.params[i];
            j["trace"] = res.trace;
            std::ofstream out(*cal_out);
            if (!out) throw std::runtime_error(*cal_out + ": cannot open for writing");
            out << j.dump(2) << '\n';
            std::cout << "fit written to " << *cal_out << '\n';
        }
    });

    // --- discover ---------------------------------------------------------------
    auto* disc_cmd = app.add_subcommand(
        "discover", "Run the builder-critic discovery loop over a price CSV");
    disc_cmd->fallthrough();
    auto disc_data = std::make_shared<std::string>();
    auto disc_memory = std::make_shared<std::string>();
    auto disc_resume = std::make_shared<std::string>();
    disc_cmd->add_option("--data", *disc_data, "Price CSV (default: config paths.prices)");
    disc_cmd->add_option("--memory", *disc_memory,
                         "Append candidate records to this JSONL file as they land");
    disc_cmd->add_option("--resume", *disc_resume,
                         "Seed the loop with records from an earlier memory JSONL");
    disc_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        std::string data_path = !disc_data->empty() ? *disc_data : run.prices_path.string();
        if (data_path.empty())
            throw std::runtime_error("discover: no price data (--data or config paths.prices)");
        std::vector<double> closes = cli_detail::load_closes(data_path);

        cli_detail::AgentStack stack = cli_detail::make_agent_stack(*shared, run);
        DiscoveryConfig dc = cli_detail::make_discovery_config(run, stack);
        if (!disc_resume->empty()) {
            std::ifstream in(*disc_resume);
            if (!in) throw std::runtime_error(*disc_resume + ": cannot open file");
            dc.initial_records = load_records(in);
            std::cout << "resumed " << dc.initial_records.size() << " records from "
                      << *disc_resume << '\n';
        }
        std::ofstream memory_out;
        if (!disc_memory->empty()) {
            memory_out.open(*disc_memory, std::ios::app);
            if (!memory_out)
                throw std::runtime_error(*disc_memory + ": cannot open for writing");
        }
        dc.on_record = [&](const CandidateRecord& rec) {
            cli_detail::print_record_line(std::cout, rec);
            if (memory_out.is_open()) {
                append_record(memory_out, rec);
                memory_out.flush();
            }
        };

        DiscoveryMemory memory = run_discovery(closes, *stack.proposer, dc);
        if (memory.loop_failed)
            throw DiscoveryError("discovery loop failed (" +
                                 std::to_string(memory.records.size()) + " records kept)");
        const CandidateRecord& best = best_model(memory);
        SdeModel m = parse_model(best.source);
        std::cout << "best: " << best.source << '\n';
        std::cout << "fitted: " << cli_detail::format_params(m, best.fitted_params) << '\n';
        std::cout << "loss: " << detail::render_number(best.loss) << "  score: "
                  << best.combined << "  iteration: " << best.iteration << '\n';
        if (!disc_memory->empty())
            std::cout << "memory written to " << *disc_memory << " ("
                      << memory.records.size() << " records total)\n";
    });

    // --- risk -------------------------------------------------------------------
    auto* risk_cmd = app.add_subcommand(
        "risk", "Monte Carlo VaR/CVaR/EVT risk report for a calibrated model");
    risk_cmd->fallthrough();
    auto risk_model = std::make_shared<std::string>();
    auto risk_params = std::make_shared<std::string>();
    auto risk_data = std::make_shared<std::string>();
    auto risk_alpha = std::make_shared<std::optional<double>>();
    auto risk_horizon = std::make_shared<std::optional<std::size_t>>();
    auto risk_paths = std::make_shared<std::optional<std::size_t>>();
    auto risk_out = std::make_shared<std::string>();
    risk_cmd->add_option("model", *risk_model, "Model text")->required();
    risk_cmd->add_option("--params", *risk_params, "Calibrated parameters, e.g. a=0.05,b=0.2")
        ->required();
    risk_cmd->add_option("--data", *risk_data, "Price CSV; simulation starts at its last close")
        ->required();
    risk_cmd->add_option("--alpha", *risk_alpha, "VaR confidence level (default 0.95)");
    risk_cmd->add_option("--horizon", *risk_horizon, "Risk horizon in steps (default 20)");
    risk_cmd->add_option("--paths", *risk_paths, "Monte Carlo paths (default 10000)");
    risk_cmd->add_option("--output", *risk_out, "Write the report as JSON to this path");
    risk_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        SdeModel m = parse_model(*risk_model);
        std::vector<double> theta = cli_detail::parse_param_list(*risk_params, m);
        std::vector<double> closes = cli_detail::load_closes(*risk_data);
        RiskConfig rc = run.risk;
        if (*risk_alpha) rc.alpha = **risk_alpha;
        if (*risk_horizon) rc.horizon = **risk_horizon;
        if (*risk_paths) rc.n_paths = **risk_paths;
        rc.seed = run.seed;
        RiskReport rep = risk_report(m, theta, closes, rc);
        cli_detail::print_risk_report(std::cout, rep, rc);
        if (!risk_out->empty()) {
            std::ofstream out(*risk_out);
            if (!out) throw std::runtime_error(*risk_out + ": cannot open for writing");
            out << cli_detail::risk_to_json(rep, rc).dump(2) << '\n';
            std::cout << "report written to " << *risk_out << '\n';
        }
    });

    // --- backtest ---------------------------------------------------------------
    auto* bt_cmd = app.add_subcommand(
        "backtest", "Day-by-day strategy backtest with per-block model discovery");
    bt_cmd->fallthrough();
    auto bt_data = std::make_shared<std::string>();
    auto bt_news = std::make_shared<std::string>();
    auto bt_out = std::make_shared<std::string>();
    auto bt_policy = std::make_shared<std::string>();
    auto bt_accounting = std::make_shared<std::string>();
    auto bt_cash = std::make_shared<std::optional<double>>();
    auto bt_lookback = std::make_shared<std::optional<int>>();
    auto bt_block = std::make_shared<std::optional<int>>();
    bt_cmd->add_option("--data", *bt_data, "Price CSV (default: config paths.prices)");
    bt_cmd->add_option("--news", *bt_news, "News JSON (default: config paths.news)");
    bt_cmd->add_option("--out", *bt_out, "Result directory (default: config paths.output)");
    bt_cmd->add_option("--policy", *bt_policy, "Decision policy: rule or llm");
    bt_cmd->add_option("--accounting", *bt_accounting, "Accounting mode: literal or cost-aware");
    bt_cmd->add_option("--cash", *bt_cash, "Initial cash (default 1000)");
    bt_cmd->add_option("--lookback", *bt_lookback, "Discovery lookback window (default 126)");
    bt_cmd->add_option("--block", *bt_block, "Trading block length in days (default 20)");
    bt_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        std::string data_path = !bt_data->empty() ? *bt_data : run.prices_path.string();
        if (data_path.empty())
            throw std::runtime_error("backtest: no price data (--data or config paths.prices)");
        PricePath prices = load_prices(data_path);
        NewsStore news;
        std::string news_path = !bt_news->empty() ? *bt_news : run.news_path.string();
        if (!news_path.empty()) news = load_news(news_path);

        BacktestConfig bc = run.backtest;
        if (!bt_policy->empty()) bc.policy = parse_policy_kind(*bt_policy);
        if (!bt_accounting->empty()) bc.accounting = parse_accounting(*bt_accounting);
        if (*bt_cash) bc.initial_cash = **bt_cash;
        if (*bt_lookback) bc.lookback = **bt_lookback;
        if (*bt_block) bc.block = **bt_block;

        cli_detail::AgentStack stack = cli_detail::make_agent_stack(*shared, run);
        bc.discovery = cli_detail::make_discovery_config(run, stack);

        std::unique_ptr<DecisionPolicy> policy;
        if (bc.policy == PolicyKind::Llm && stack.is_online) {
            policy = std::make_unique<LlmPolicy>(*stack.transport, stack.agent_config,
                                                 bc.symbol);
        } else {
            if (bc.policy == PolicyKind::Llm)
                std::cerr << "sdekit: offline run uses the rule policy\n";
            bc.policy = PolicyKind::Rule;
            policy = std::make_unique<RulePolicy>(bc.evt_loss_limit);
        }

        BacktestResult result = run_backtest(prices, news, bc, *stack.proposer, *policy);
        BacktestResult baseline = buy_and_hold(prices, bc);

        std::string out_dir = !bt_out->empty() ? *bt_out : run.output_dir.string();
        if (!out_dir.empty()) save_result(result, bc, out_dir);

        if (result.failed) {
            if (!out_dir.empty()) std::cerr << "partial result written to " << out_dir << '\n';
            throw DiscoveryError("backtest failed: " + result.failure_reason);
        }
        std::cout << "days traded: " << result.dates.size() << '\n';
        cli_detail::print_perf_line(std::cout, "strategy", result);
        cli_detail::print_perf_line(std::cout, "buy-and-hold", baseline);
        if (!out_dir.empty()) std::cout << "result written to " << out_dir << '\n';
    });

    // --- baseline ---------------------------------------------------------------
    auto* base_cmd =
        app.add_subcommand("baseline", "Costed buy-and-hold benchmark on a price CSV");
    base_cmd->fallthrough();
    auto base_data = std::make_shared<std::string>();
    auto base_out = std::make_shared<std::string>();
    auto base_cash = std::make_shared<std::optional<double>>();
    base_cmd->add_option("--data", *base_data, "Price CSV (default: config paths.prices)");
    base_cmd->add_option("--out", *base_out, "Result directory (optional)");
    base_cmd->add_option("--cash", *base_cash, "Initial cash (default 1000)");
    base_cmd->callback([=]() {
        RunConfig run = shared->resolve();
        std::string data_path = !base_data->empty() ? *base_data : run.prices_path.string();
        if (data_path.empty())
            throw std::runtime_error("baseline: no price data (--data or config paths.prices)");
        PricePath prices = load_prices(data_path);
        BacktestConfig bc = run.backtest;
        if (*base_cash) bc.initial_cash = **base_cash;
        BacktestResult res = buy_and_hold(prices, bc);
        std::cout << "days: " << res.dates.size() << '\n';
        cli_detail::print_perf_line(std::cout, "buy-and-hold", res);
        if (!base_out->empty()) {
            save_result(res, bc, *base_out);
            std::cout << "result written to " << *base_out << '\n';
        }
    });

    // --- report -----------------------------------------------------------------
    auto* rep_cmd = app.add_subcommand(
        "report", "Render a saved result directory to Markdown plus plot CSVs");
    rep_cmd->fallthrough();
    auto rep_dir = std::make_shared<std::string>();
    rep_cmd->add_option("dir", *rep_dir, "Result directory written by backtest/baseline")
        ->required();
    rep_cmd->callback([=]() {
        const std::filesystem::path report_path = write_report(*rep_dir);
        std::cout << render_report_markdown(*rep_dir);
        std::cout << "\nreport written to " << report_path.string() << '\n';
    });

    // --- dispatch ---------------------------------------------------------------
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "sdekit: model parse error: " << e.what() << '\n';
        return kExitModelParseError;
    } catch (const SimulationError& e) {
        std::cerr << "sdekit: simulation error: " << e.what() << '\n';
        return kExitSimulationError;
    } catch (const DiscoveryError& e) {
        std::cerr << "sdekit: discovery error: " << e.what() << '\n';
        return kExitDiscoveryError;
    } catch (const TransportError& e) {
        std::cerr << "sdekit: transport error: " << e.what() << '\n';
        return kExitAgentError;
    } catch (const AgentError& e) {
        std::cerr << "sdekit: agent error: " << e.what() << '\n';
        return kExitAgentError;
    } catch (const LookaheadViolation& e) {
        std::cerr << "sdekit: lookahead violation: " << e.what() << '\n';
        return kExitLookaheadError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "sdekit: invalid argument: " << e.what() << '\n';
        return kExitInvalidArgument;
    } catch (const std::runtime_error& e) {
        std::cerr << "sdekit: " << e.what() << '\n';
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "sdekit: unexpected error: " << e.what() << '\n';
        return kExitUnexpected;
    }
    return kExitOk;
}

}  // namespace sdekit
