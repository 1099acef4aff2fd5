#include "termnav/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace termnav {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

}  // namespace

std::string CellKey::label() const {
    return to_string(policy) + "_t" + fixed(threshold, 2) + "_" + assessor + "_" + variant;
}

std::size_t SweepSpec::total_runs() const {
    return scenario_seeds.size() * policies.size() * thresholds.size() * assessors.size() * variants.size() *
           static_cast<std::size_t>(std::max(repetitions, 0));
}

void validate(const SweepSpec& s) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigurationError(std::string("sweep: ") + what);
    };
    require(!s.scenario_seeds.empty(), "no scenario seeds");
    require(!s.policies.empty(), "no policies");
    require(!s.thresholds.empty(), "no thresholds");
    require(!s.assessors.empty(), "no assessors");
    require(!s.variants.empty(), "no variants");
    require(s.repetitions > 0, "repetitions must be positive");
    require(s.workers > 0, "workers must be positive");
    require(s.marginal_window > 0, "marginal_window must be positive");
    for (double t : s.thresholds) require(t > 0 && t <= 1, "thresholds must lie in (0, 1]");
    validate(s.base);
}

std::vector<Variant> ablation_variants() {
    return {
        {"none", false, false, false, false},
        {"seg", true, false, false, false},
        {"seg_rates", true, true, false, false},
        {"seg_assess", true, false, true, true},
        {"full", true, true, true, true},
    };
}

EpisodeConfig cell_config(const SweepSpec& spec, const CellKey& key, const Variant& variant, int repetition) {
    EpisodeConfig c = spec.base;
    c.policy = variant.assessment ? key.policy : Policy::Naive;
    c.trigger_threshold = key.threshold;
    for (const auto& a : spec.assessors)
        if (a.name == key.assessor) c.assessor = a.config;
    c.assessor.reperception = c.assessor.reperception && variant.reperception;
    c.use_segmentation = variant.use_segmentation;
    c.use_region_estimation = variant.use_region_estimation;
    c.sensor.noise_seed += static_cast<std::uint64_t>(repetition);
    c.assessor.rng_seed += static_cast<std::uint64_t>(repetition);
    c.record_trace = true;
    return c;
}

Scenario sweep_scenario(const SweepSpec& spec, std::uint64_t seed) {
    FloorplanParams p = spec.floorplan;
    p.seed = seed;
    return generate_floorplan(p);
}

EpisodeRecord run_cell_episode(const SweepSpec& spec, const Scenario& scenario, const CellKey& key,
                               const Variant& variant, int repetition, std::vector<StepRecord>* trace) {
    EpisodeRecord rec;
    rec.cell = key;
    rec.seed = scenario.seed;
    rec.repetition = repetition;
    try {
        const EpisodeResult r = run_episode(scenario, cell_config(spec, key, variant, repetition));
        const Metrics m = adjudicate(r);
        rec.success = r.success;
        rec.spl = m.spl;
        rec.soft_spl = m.soft_spl;
        rec.steps = r.steps_taken;
        rec.path_length = r.path_length;
        rec.shortest_path = r.shortest_path;
        rec.collisions = r.collisions;
        rec.end_reason = r.end_reason;
        rec.terminations = static_cast<int>(r.termination_events.size());
        rec.first_detection_step = r.first_detection_step;
        rec.found_at_rate = r.found_at_rate;
        for (const auto& s : r.trace) rec.rate_series.push_back(s.region_rate);
        if (trace) *trace = r.trace;
    } catch (const std::exception& e) {
        rec.failure = e.what();
    }
    return rec;
}

std::string to_json_line(const EpisodeRecord& r) {
    json j;
    j["policy"] = to_string(r.cell.policy);
    j["threshold"] = r.cell.threshold;
    j["assessor"] = r.cell.assessor;
    j["variant"] = r.cell.variant;
    j["seed"] = r.seed;
    j["repetition"] = r.repetition;
    j["failure"] = r.failure ? json(*r.failure) : json(nullptr);
    j["success"] = r.success;
    j["spl"] = r.spl;
    j["soft_spl"] = r.soft_spl;
    j["steps"] = r.steps;
    j["path_length"] = r.path_length;
    j["shortest_path"] = r.shortest_path;
    j["collisions"] = r.collisions;
    j["end_reason"] = r.end_reason;
    j["terminations"] = r.terminations;
    j["first_detection_step"] = r.first_detection_step ? json(*r.first_detection_step) : json(nullptr);
    j["found_at_rate"] = r.found_at_rate ? json(*r.found_at_rate) : json(nullptr);
    j["rate_series"] = r.rate_series;
    return j.dump();
}

EpisodeRecord episode_record_from_json(const std::string& line) {
    try {
        const json j = json::parse(line);
        EpisodeRecord r;
        r.cell.policy = policy_from_string(j.at("policy"));
        r.cell.threshold = j.at("threshold");
        r.cell.assessor = j.at("assessor");
        r.cell.variant = j.at("variant");
        r.seed = j.at("seed");
        r.repetition = j.at("repetition");
        if (!j.at("failure").is_null()) r.failure = j.at("failure").get<std::string>();
        r.success = j.at("success");
        r.spl = j.at("spl");
        r.soft_spl = j.at("soft_spl");
        r.steps = j.at("steps");
        r.path_length = j.at("path_length");
        r.shortest_path = j.at("shortest_path");
        r.collisions = j.at("collisions");
        r.end_reason = j.at("end_reason");
        r.terminations = j.at("terminations");
        if (!j.at("first_detection_step").is_null()) r.first_detection_step = j.at("first_detection_step").get<int>();
        if (!j.at("found_at_rate").is_null()) r.found_at_rate = j.at("found_at_rate").get<double>();
        r.rate_series = j.at("rate_series").get<std::vector<double>>();
        return r;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("episode record: ") + e.what());
    }
}

std::vector<EpisodeRecord> read_episode_records(std::istream& is) {
    std::vector<EpisodeRecord> out;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') out.push_back(episode_record_from_json(line));
    return out;
}

void Histogram::add(double rate) {
    const int bin = rate >= 1.0 ? 10 : std::clamp(static_cast<int>(std::floor(rate * 10.0)), 0, 9);
    ++counts[bin];
}

int Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

int Histogram::below_bin(int k) const {
    return std::accumulate(counts.begin(), counts.begin() + std::clamp(k, 0, 11), 0);
}

MarginalReport marginal_analysis(std::span<const EpisodeRecord> records, int window) {
    if (window <= 0) throw std::invalid_argument("marginal_analysis: window must be positive");
    MarginalReport out;
    out.series.window = window;
    std::size_t len = 0;
    int used = 0;
    for (const auto& r : records)
        if (!r.failure && !r.rate_series.empty()) {
            len = std::max(len, r.rate_series.size());
            ++used;
        }
    out.series.mean_rate.assign(len + 1, 0.0);
    for (const auto& r : records) {
        if (r.failure || r.rate_series.empty()) continue;
        for (std::size_t s = 1; s <= len; ++s)
            out.series.mean_rate[s] += r.rate_series[std::min(s, r.rate_series.size()) - 1];
    }
    if (used > 0)
        for (auto& v : out.series.mean_rate) v /= used;
    // Marginals only over episodes still running in the window; padding
    // finished ones would pull late windows to zero.
    std::vector<double> idx;
    for (std::size_t start = 0; start < len; start += window) {
        double sum = 0.0;
        int active = 0;
        for (const auto& r : records) {
            const std::size_t n = r.rate_series.size();
            if (r.failure || n <= start) continue;
            const std::size_t end = std::min(start + window, n);
            const double before = start == 0 ? 0.0 : r.rate_series[start - 1];
            sum += (r.rate_series[end - 1] - before) / static_cast<double>(end - start);
            ++active;
        }
        out.series.window_marginal.push_back(sum / active);
        idx.push_back(static_cast<double>(idx.size()));
    }
    out.series.trend = spearman(idx, out.series.window_marginal);
    for (const auto& r : records)
        if (!r.failure && r.found_at_rate) out.found_at_rate.add(*r.found_at_rate);
    return out;
}

AggregateReport aggregate(std::vector<EpisodeRecord> records, int window) {
    AggregateReport report;
    std::vector<std::string> order;
    std::map<std::string, std::vector<EpisodeRecord>> groups;
    for (auto& r : records) {
        const std::string label = r.cell.label();
        if (!groups.contains(label)) order.push_back(label);
        groups[label].push_back(std::move(r));
    }
    for (const auto& label : order) {
        auto& g = groups[label];
        std::stable_sort(g.begin(), g.end(), [](const EpisodeRecord& a, const EpisodeRecord& b) {
            return std::tie(a.seed, a.repetition) < std::tie(b.seed, b.repetition);
        });
        CellReport cell;
        cell.key = g.front().cell;
        std::vector<double> success, spl, soft, steps, collisions;
        for (const auto& r : g) {
            ++cell.episodes;
            if (r.failure) {
                ++cell.failures;
                continue;
            }
            success.push_back(r.success ? 1.0 : 0.0);
            spl.push_back(r.spl);
            soft.push_back(r.soft_spl);
            steps.push_back(r.steps);
            collisions.push_back(r.collisions);
        }
        cell.success = mean_ci(success);
        cell.spl = mean_ci(spl);
        cell.soft_spl = mean_ci(soft);
        cell.steps = mean_ci(steps);
        cell.collisions = mean_ci(collisions);
        cell.marginal = marginal_analysis(g, window);
        report.cells.push_back(std::move(cell));
        for (auto& r : g) report.episodes.push_back(std::move(r));
    }
    return report;
}

std::vector<double> cell_metric(const AggregateReport& report, const CellKey& key, const std::string& metric) {
    std::vector<double> out;
    for (const auto& r : report.episodes) {
        if (!(r.cell == key) || r.failure) continue;
        if (metric == "spl")
            out.push_back(r.spl);
        else if (metric == "soft_spl")
            out.push_back(r.soft_spl);
        else if (metric == "success")
            out.push_back(r.success ? 1.0 : 0.0);
        else if (metric == "steps")
            out.push_back(r.steps);
        else
            throw std::invalid_argument("unknown metric '" + metric + "'");
    }
    return out;
}

void write_aggregate_csv(std::ostream& os, const AggregateReport& report) {
    os << "# termnav-aggregate v1\n";
    os << "policy,threshold,assessor,variant,episodes,failures,status,sr,sr_ci,spl,spl_ci,soft_spl,soft_spl_ci,"
          "steps,steps_ci,collisions,collisions_ci\n";
    for (const auto& c : report.cells) {
        os << to_string(c.key.policy) << ',' << fixed(c.key.threshold, 2) << ',' << c.key.assessor << ','
           << c.key.variant << ',' << c.episodes << ',' << c.failures << ',' << (c.failures ? "failed" : "ok");
        for (const MeanCI* m : {&c.success, &c.spl, &c.soft_spl, &c.steps, &c.collisions})
            os << ',' << fixed(m->mean) << ',' << fixed(m->half_width);
        os << '\n';
    }
}

void write_series_csv(std::ostream& os, const AggregateReport& report) {
    os << "# termnav-series v1\n";
    os << "cell,step,mean_rate\n";
    for (const auto& c : report.cells)
        for (std::size_t s = 0; s < c.marginal.series.mean_rate.size(); ++s)
            os << c.key.label() << ',' << s << ',' << fixed(c.marginal.series.mean_rate[s]) << '\n';
}

void write_marginal_csv(std::ostream& os, const AggregateReport& report) {
    os << "# termnav-marginal v1\n";
    os << "cell,window,first_step,mean_marginal,spearman_rho,spearman_p_less\n";
    for (const auto& c : report.cells) {
        const auto& s = c.marginal.series;
        for (std::size_t w = 0; w < s.window_marginal.size(); ++w)
            os << c.key.label() << ',' << w << ',' << w * s.window << ',' << fixed(s.window_marginal[w], 8) << ','
               << fixed(s.trend.rho) << ',' << fixed(s.trend.p_less, 8) << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const AggregateReport& report) {
    os << "# termnav-histogram v1\n";
    os << "cell,bin_lo,bin_hi,count\n";
    for (const auto& c : report.cells)
        for (int k = 0; k < 11; ++k)
            os << c.key.label() << ',' << fixed(std::min(k, 10) / 10.0, 1) << ','
               << fixed(k == 10 ? 1.0 : (k + 1) / 10.0, 1) << ',' << c.marginal.found_at_rate.counts[k] << '\n';
}

void write_report_files(const AggregateReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        auto os = open_out(out_dir / "episodes.jsonl");
        for (const auto& r : report.episodes) os << to_json_line(r) << '\n';
    }
    {
        auto os = open_out(out_dir / "aggregate.csv");
        write_aggregate_csv(os, report);
    }
    {
        auto os = open_out(out_dir / "series.csv");
        write_series_csv(os, report);
    }
    {
        auto os = open_out(out_dir / "marginal.csv");
        write_marginal_csv(os, report);
    }
    {
        auto os = open_out(out_dir / "histogram.csv");
        write_histogram_csv(os, report);
    }
}

AggregateReport run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir) {
    validate(spec);

    // Scenarios first: shared read-only by every episode.
    std::vector<std::optional<Scenario>> scenarios(spec.scenario_seeds.size());
    std::vector<std::string> generation_errors(spec.scenario_seeds.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        try {
            scenarios[i] = sweep_scenario(spec, spec.scenario_seeds[i]);
        } catch (const std::exception& e) {
            generation_errors[i] = e.what();
        }
    }

    struct Task {
        CellKey key;
        const Variant* variant;
        std::size_t scenario;
        int repetition;
    };
    std::vector<Task> tasks;
    for (auto policy : spec.policies)
        for (double threshold : spec.thresholds)
            for (const auto& a : spec.assessors)
                for (const auto& v : spec.variants)
                    for (std::size_t si = 0; si < spec.scenario_seeds.size(); ++si)
                        for (int rep = 0; rep < spec.repetitions; ++rep)
                            tasks.push_back({{policy, threshold, a.name, v.name}, &v, si, rep});

    std::vector<EpisodeRecord> results(tasks.size());
    std::vector<std::vector<StepRecord>> traces(spec.write_traces ? tasks.size() : 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const Task& t = tasks[i];
            if (!scenarios[t.scenario]) {
                EpisodeRecord rec;
                rec.cell = t.key;
                rec.seed = spec.scenario_seeds[t.scenario];
                rec.repetition = t.repetition;
                rec.failure = "generation: " + generation_errors[t.scenario];
                results[i] = std::move(rec);
                continue;
            }
            results[i] = run_cell_episode(spec, *scenarios[t.scenario], t.key, *t.variant, t.repetition,
                                          spec.write_traces ? &traces[i] : nullptr);
        }
    };
    {
        std::vector<std::jthread> pool;
        const int n = std::min<int>(spec.workers, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
        for (int w = 1; w < n; ++w) pool.emplace_back(worker);
        worker();
    }

    if (spec.write_traces) {
        std::filesystem::create_directories(out_dir / "traces");
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& r = results[i];
            auto os = open_out(out_dir / "traces" /
                               (r.cell.label() + "_s" + std::to_string(r.seed) + "_r" + std::to_string(r.repetition) +
                                ".jsonl"));
            for (const auto& s : traces[i]) os << step_record_to_json(s) << '\n';
        }
    }

    AggregateReport report = aggregate(std::move(results), spec.marginal_window);
    write_report_files(report, out_dir);
    return report;
}

}  // namespace termnav
