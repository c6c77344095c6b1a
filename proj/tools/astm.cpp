// Command-line experiment runner: simulate single scenarios, train the
// forecaster, generate scenario suites, and run fixed-vs-adaptive
// comparisons. Every run is reproducible from the explicit seeds.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "astm/astm.hpp"

namespace {

int cmd_simulate(const std::string& config, const std::string& controller,
                 std::optional<std::uint64_t> seed, const std::string& out_dir,
                 const std::string& model_path, double fixed_cycle) {
    const astm::ScenarioFile bundle = astm::load_scenario_file(config);
    for (const std::string& w : bundle.warnings) std::cerr << "warning: " << w << '\n';

    const std::uint64_t run_seed = seed.value_or(bundle.scenario.seed);
    std::optional<astm::LstmModel> model;
    if (controller == "astm") {
        if (!model_path.empty()) {
            model = astm::load_model(model_path);
        } else {
            std::cout << "no --model given; training a default forecaster (deterministic)\n";
            astm::ForecasterOptions opts;
            opts.epochs = 60;
            const astm::HourlySeries series = astm::build_training_series(run_seed, 10);
            model = astm::train_forecaster_on_series(series, opts);
        }
    }

    const astm::SimLog log = astm::run_with_controller(
        bundle, controller, run_seed, model ? &*model : nullptr, fixed_cycle);
    const astm::MetricsReport report = astm::compute_report(log, bundle.scenario);

    std::cout << "scenario " << config << " | controller " << controller << " | seed "
              << run_seed << '\n'
              << astm::metrics_summary(report);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        astm::write_vehicle_csv(log, out_dir + "/vehicles.csv");
        astm::write_throughput_csv(log, out_dir + "/throughput.csv");
        std::ofstream metrics(out_dir + "/metrics.csv");
        metrics << astm::metrics_csv_header() << '\n' << astm::metrics_csv_row(report) << '\n';
        std::cout << "wrote " << out_dir << "/{vehicles,throughput,metrics}.csv\n";
    }
    return 0;
}

int cmd_train(const std::string& data, const std::string& out, int epochs, double lr, int hidden,
              int window, std::uint64_t seed) {
    const astm::HourlySeries series = astm::load_counts_csv(data);
    astm::ForecasterOptions opts;
    opts.hidden = hidden;
    opts.window = window;
    opts.epochs = epochs;
    opts.learning_rate = lr;
    opts.seed = seed;
    astm::TrainResult history;
    const astm::LstmModel model = astm::train_forecaster_on_series(series, opts, &history);
    astm::save_model(model, out);
    std::printf("trained on %zu hours, %d epochs: loss %.6f -> %.6f (normalized MSE)\n",
                series.counts.size(), epochs,
                history.loss_history.empty() ? 0.0 : history.loss_history.front(),
                history.loss_history.empty() ? 0.0 : history.loss_history.back());
    std::cout << "saved model to " << out << '\n';
    return 0;
}

int cmd_generate(int n, std::uint64_t seed, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::vector<astm::Scenario> suite = astm::generate_suite(n, seed);
    for (std::size_t i = 0; i < suite.size(); ++i) {
        astm::ScenarioFile file;
        file.scenario = suite[i];
        char name[64];
        std::snprintf(name, sizeof(name), "/scenario_%03zu.json", i);
        astm::save_scenario_file(file, out_dir + name);
    }
    std::cout << "wrote " << suite.size() << " scenarios to " << out_dir << '\n';
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_dir) {
    astm::ExperimentConfig config = astm::load_experiment_config(config_path);
    const astm::ComparisonReport report = astm::run_comparison(config);
    astm::emit_report(report, out_dir);

    auto pct = [](const std::optional<double>& v) {
        if (!v) return std::string("na");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f%%", *v * 100.0);
        return std::string(buf);
    };
    std::printf("flow   fixed %.3f veh/min | astm %.3f veh/min | improvement %s\n",
                report.baseline_agg.mean_flow, report.astm_agg.mean_flow,
                pct(report.flow_improvement).c_str());
    if (report.baseline_agg.mean_delay && report.astm_agg.mean_delay) {
        std::printf("delay  fixed %.3f s/veh | astm %.3f s/veh | improvement %s\n",
                    *report.baseline_agg.mean_delay, *report.astm_agg.mean_delay,
                    pct(report.delay_improvement).c_str());
    }
    for (const std::string& n : report.notes) std::cout << "note: " << n << '\n';
    std::cout << "report written to " << out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive traffic-signal control laboratory"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run one scenario under one controller");
    std::string sim_config, sim_controller = "fixed", sim_out, sim_model;
    std::optional<std::uint64_t> sim_seed;
    double sim_fixed_cycle = 90.0;
    sim->add_option("--config", sim_config, "scenario file")->required();
    sim->add_option("--controller", sim_controller, "fixed|astm")
        ->check(CLI::IsMember({"fixed", "astm"}));
    sim->add_option("--seed", sim_seed, "run seed (default: the scenario's seed)");
    sim->add_option("--out", sim_out, "output directory for CSV logs");
    sim->add_option("--model", sim_model, "forecaster model file (astm controller)");
    sim->add_option("--fixed-cycle", sim_fixed_cycle, "fixed controller cycle length, s");

    // train-forecaster
    auto* train = app.add_subcommand("train-forecaster", "train the LSTM on an hourly count CSV");
    std::string train_data, train_out = "model.json";
    int train_epochs = 80, train_hidden = 32, train_window = 24;
    double train_lr = 0.1;
    std::uint64_t train_seed = 7;
    train->add_option("--data", train_data, "CSV of timestamp,count rows")->required();
    train->add_option("--out", train_out, "model output file");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--hidden", train_hidden, "hidden units");
    train->add_option("--window", train_window, "context window, hours");
    train->add_option("--seed", train_seed, "init seed");

    // generate-suite
    auto* gen = app.add_subcommand("generate-suite", "write a random scenario suite");
    int gen_n = 20;
    std::uint64_t gen_seed = 11;
    std::string gen_out = "suite";
    gen->add_option("--n", gen_n, "number of scenarios");
    gen->add_option("--seed", gen_seed, "suite seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "paired fixed-vs-astm comparison");
    std::string cmp_config, cmp_out = "report";
    cmp->add_option("--config", cmp_config, "experiment config file")->required();
    cmp->add_option("--out", cmp_out, "report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim)
            return cmd_simulate(sim_config, sim_controller, sim_seed, sim_out, sim_model,
                                sim_fixed_cycle);
        if (*train)
            return cmd_train(train_data, train_out, train_epochs, train_lr, train_hidden,
                             train_window, train_seed);
        if (*gen) return cmd_generate(gen_n, gen_seed, gen_out);
        if (*cmp) return cmd_compare(cmp_config, cmp_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
