// kineseq command line: analyze keypoint streams, classify single frames,
// project datasets for plotting, generate tempo variants, simulate streams,
// and benchmark the per-frame budget.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kineseq/kineseq.hpp"

namespace {

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kineseq::Error("cannot open file: " + path);
    return in;
}

nlohmann::json parse_json_file(const std::string& path) {
    auto in = open_file(path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw kineseq::ParseError(path + ": " + e.what());
    }
}

std::string read_all(std::istream& in) {
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

/// Config flags shared by the subcommands; only flags the user actually
/// passed override the file and environment values.
struct ConfigOptions {
    std::string config_file;
    std::optional<std::int64_t> frame_period_ms;
    std::optional<std::size_t> buffer_capacity;
    std::optional<double> null_threshold;
    std::optional<std::size_t> separator_len;
    std::optional<std::size_t> k;
    std::optional<std::size_t> edit_limit;
    std::optional<std::size_t> segment_len;
    std::optional<double> position_scale;
    std::optional<double> min_keypoint_score;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "Configuration file (JSON)");
        cmd->add_option("--frame-period-ms", frame_period_ms, "Frame period in milliseconds");
        cmd->add_option("--buffer-capacity", buffer_capacity, "Rolling buffer capacity in frames");
        cmd->add_option("--null-threshold", null_threshold, "kNN accuracy below which a frame is NULL");
        cmd->add_option("--separator-len", separator_len, "NULL frames required to separate movements");
        cmd->add_option("--k", k, "kNN neighbour count");
        cmd->add_option("--edit-limit", edit_limit, "Maximum accepted edit distance");
        cmd->add_option("--segment-len", segment_len, "Window length for inaccuracy localisation");
        cmd->add_option("--position-scale", position_scale, "Embedding scale of the position flag");
        cmd->add_option("--min-keypoint-score", min_keypoint_score,
                        "Frames with any keypoint below this score become NULL");
    }

    kineseq::EngineConfig resolve() const {
        kineseq::EngineConfig cfg;
        if (!config_file.empty()) cfg = kineseq::config_from_json(parse_json_file(config_file));
        cfg = kineseq::apply_env_overrides(cfg);
        if (frame_period_ms) cfg.frame_period_ms = *frame_period_ms;
        if (buffer_capacity) cfg.buffer_capacity = *buffer_capacity;
        if (null_threshold) cfg.null_threshold = *null_threshold;
        if (separator_len) cfg.separator_len = *separator_len;
        if (k) cfg.k = *k;
        if (edit_limit) cfg.edit_limit = *edit_limit;
        if (segment_len) cfg.segment_len = *segment_len;
        if (position_scale) cfg.position_scale = *position_scale;
        if (min_keypoint_score) cfg.min_keypoint_score = *min_keypoint_score;
        cfg.validate();
        return cfg;
    }
};

kineseq::AngleSpecTable load_specs(const std::string& path) {
    if (path.empty()) return kineseq::default_angle_specs();
    return kineseq::angle_specs_from_json(parse_json_file(path));
}

kineseq::EvaluationDataset load_dataset_file(const std::string& path,
                                             const kineseq::AngleSpecTable& specs) {
    auto in = open_file(path);
    try {
        return kineseq::load_dataset(in, specs);
    } catch (const kineseq::Error& e) {
        throw kineseq::ParseError(path + ": " + e.what());
    }
}

int run_analyze(const std::string& dataset_path, const std::string& dictionary_path,
                const std::string& input_path, const std::string& specs_path,
                const ConfigOptions& options, bool stream_mode) {
    const auto specs = load_specs(specs_path);
    const auto config = options.resolve();
    auto dataset = load_dataset_file(dataset_path, specs);
    auto dictionary = kineseq::dictionary_from_json(parse_json_file(dictionary_path));

    std::ifstream file;
    std::istream* in = &std::cin;
    if (input_path != "-") {
        file = open_file(input_path);
        in = &file;
    }

    kineseq::Engine engine(config, std::move(dataset), std::move(dictionary), specs);
    auto emit = [&](const std::vector<kineseq::ReportEvent>& events) {
        if (!stream_mode) return;
        for (const auto& event : events) {
            nlohmann::json j;
            if (const auto* m = std::get_if<kineseq::IdentifiedMovement>(&event)) {
                j = kineseq::identified_to_json(*m);
                j["type"] = "identified";
            } else {
                j = kineseq::unmatched_to_json(std::get<kineseq::UnmatchedSpan>(event));
                j["type"] = "unmatched";
            }
            std::cout << j.dump() << '\n' << std::flush;
        }
    };

    for (const auto& frame : kineseq::parse_stream(*in)) emit(engine.push(frame));
    emit(engine.finish());

    if (!stream_mode) std::cout << kineseq::report_to_json(engine.report()).dump(2) << '\n';
    return 0;
}

int run_classify(const std::string& dataset_path, const std::string& input_path,
                 const std::string& specs_path, const ConfigOptions& options) {
    const auto specs = load_specs(specs_path);
    const auto config = options.resolve();
    auto dataset = load_dataset_file(dataset_path, specs);
    dataset.k = config.k;

    nlohmann::json doc;
    if (input_path == "-") {
        try {
            doc = nlohmann::json::parse(read_all(std::cin));
        } catch (const nlohmann::json::exception& e) {
            throw kineseq::StreamFormatError(std::string("stdin: ") + e.what());
        }
    } else {
        doc = parse_json_file(input_path);
    }
    const kineseq::RawFrame frame = kineseq::frame_from_json(doc);

    nlohmann::json out;
    try {
        const auto features = kineseq::extract_features(frame, specs);
        const auto result = kineseq::classify(features, dataset);
        out = {{"label", result.label}, {"accuracy", result.accuracy}};
    } catch (const kineseq::DegenerateTriangleError&) {
        out = {{"label", nullptr}, {"accuracy", 0.0}};
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int run_project(const std::string& dataset_path, const std::string& output_path,
                const std::string& specs_path) {
    const auto specs = load_specs(specs_path);
    const auto dataset = load_dataset_file(dataset_path, specs);
    const auto points = kineseq::pca_project(dataset);
    if (output_path.empty() || output_path == "-") {
        kineseq::write_pca_csv(std::cout, points);
    } else {
        std::ofstream out(output_path);
        if (!out) throw kineseq::Error("cannot write file: " + output_path);
        kineseq::write_pca_csv(out, points);
    }
    return 0;
}

int run_gen_variants(const std::string& ideal_text, const std::vector<double>& scales) {
    for (double s : scales)
        if (!(s > 0.0)) throw kineseq::Error("scales must be positive");
    const auto ideal = kineseq::parse_tokens(ideal_text);
    if (ideal.empty()) throw kineseq::Error("--ideal must contain at least one token");
    for (const auto& variant : kineseq::generate_variants(ideal, scales))
        std::cout << kineseq::format_tokens(variant) << '\n';
    return 0;
}

int run_simulate(const std::string& script_text, const std::string& poses_path, double jitter,
                 std::uint64_t seed, std::int64_t period_ms, const std::string& output_path) {
    if (jitter < 0.0) throw kineseq::Error("--jitter must be >= 0");
    if (period_ms <= 0) throw kineseq::Error("--period must be positive");
    const auto poses = poses_path.empty() ? kineseq::default_canonical_poses()
                                          : kineseq::poses_from_json(parse_json_file(poses_path));
    const auto script = kineseq::parse_script(script_text, jitter, seed);
    const auto frames = kineseq::render_stream(script, poses, period_ms);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!output_path.empty() && output_path != "-") {
        file.open(output_path);
        if (!file) throw kineseq::Error("cannot write file: " + output_path);
        out = &file;
    }
    for (const auto& frame : frames) *out << kineseq::frame_to_json(frame).dump() << '\n';
    return 0;
}

int run_bench(std::size_t iterations, std::size_t variants, std::uint64_t seed) {
    const auto result = kineseq::run_benchmark(iterations, variants, seed);
    nlohmann::json j = {{"median_ms", result.median_ms},
                        {"max_ms", result.max_ms},
                        {"iterations", result.iterations},
                        {"variant_count", result.variant_count},
                        {"dataset_size", result.dataset_size},
                        {"frame_period_ms", result.frame_period_ms},
                        {"within_budget", result.within_budget()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kineseq - pose sequence movement analysis engine"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "Analyze a keypoint stream and emit a report");
    std::string an_dataset, an_dictionary, an_input = "-", an_specs;
    bool an_stream = false;
    ConfigOptions an_config;
    analyze->add_option("--dataset", an_dataset, "Evaluation dataset CSV")->required();
    analyze->add_option("--dictionary", an_dictionary, "Movement dictionary JSON")->required();
    analyze->add_option("--input", an_input, "Keypoint stream (JSON lines or array), - for stdin");
    analyze->add_option("--angle-specs", an_specs, "Angle spec table JSON");
    analyze->add_flag("--stream", an_stream, "Emit line-delimited events instead of one document");
    an_config.attach(analyze);

    auto* classify = app.add_subcommand("classify", "Classify a single keypoint frame");
    std::string cl_dataset, cl_input = "-", cl_specs;
    ConfigOptions cl_config;
    classify->add_option("--dataset", cl_dataset, "Evaluation dataset CSV")->required();
    classify->add_option("--input", cl_input, "Frame JSON object, - for stdin");
    classify->add_option("--angle-specs", cl_specs, "Angle spec table JSON");
    cl_config.attach(classify);

    auto* project = app.add_subcommand("project", "PCA plot data (x,y,label CSV) for a dataset");
    std::string pr_dataset, pr_output = "-", pr_specs;
    project->add_option("--dataset", pr_dataset, "Evaluation dataset CSV")->required();
    project->add_option("--output", pr_output, "Output CSV path, - for stdout");
    project->add_option("--angle-specs", pr_specs, "Angle spec table JSON");

    auto* gen = app.add_subcommand("gen-variants", "Scale an ideal sequence into tempo variants");
    std::string gv_ideal;
    std::vector<double> gv_scales;
    gen->add_option("--ideal", gv_ideal, "Ideal token sequence, e.g. \"A6 B6 C10 B6 A6\"")
        ->required();
    gen->add_option("--scales", gv_scales, "Tempo multipliers")->required()->delimiter(',');

    auto* simulate = app.add_subcommand("simulate", "Render a synthetic keypoint stream");
    std::string si_script, si_poses, si_output = "-";
    double si_jitter = 0.0;
    std::uint64_t si_seed = 0;
    std::int64_t si_period = 150;
    simulate->add_option("--script", si_script, "Script tokens; N runs are NULL, e.g. \"A6 N7 B6\"")
        ->required();
    simulate->add_option("--poses", si_poses, "Canonical pose file JSON (default: built-in poses)");
    simulate->add_option("--jitter", si_jitter, "Pixel standard deviation of keypoint noise");
    simulate->add_option("--seed", si_seed, "Random seed");
    simulate->add_option("--period", si_period, "Frame period in milliseconds");
    simulate->add_option("--output", si_output, "Output path, - for stdout");

    auto* bench = app.add_subcommand("bench", "Measure the per-frame processing budget");
    std::size_t be_iterations = 100, be_variants = 400;
    std::uint64_t be_seed = 1234;
    bench->add_option("--iterations", be_iterations, "Timed frame periods");
    bench->add_option("--variants", be_variants, "Dictionary variants to match against");
    bench->add_option("--seed", be_seed, "Workload seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed())
            return run_analyze(an_dataset, an_dictionary, an_input, an_specs, an_config,
                               an_stream);
        if (classify->parsed()) return run_classify(cl_dataset, cl_input, cl_specs, cl_config);
        if (project->parsed()) return run_project(pr_dataset, pr_output, pr_specs);
        if (gen->parsed()) return run_gen_variants(gv_ideal, gv_scales);
        if (simulate->parsed())
            return run_simulate(si_script, si_poses, si_jitter, si_seed, si_period, si_output);
        if (bench->parsed()) return run_bench(be_iterations, be_variants, be_seed);
    } catch (const std::exception& e) {
        std::cerr << "kineseq: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
