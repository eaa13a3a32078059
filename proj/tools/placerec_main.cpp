#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "placerec/evaluation.hpp"
#include "placerec/pipeline.hpp"

namespace fs = std::filesystem;
using namespace placerec;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KeyDef {
    const char* name;
    const char* fallback;  // nullptr marks a required key
    const char* help;
};

struct CommandDef {
    const char* name;
    const char* summary;
    std::vector<KeyDef> keys;
};

const std::vector<CommandDef>& command_table() {
    static const std::vector<CommandDef> table = {
        {"simulate",
         "generate a synthetic session (world, trajectory, lidar and radar renders)",
         {
             {"output", nullptr, "session directory to create"},
             {"seed", nullptr, "master seed for trajectory and sensor noise"},
             {"world-seed", "", "world seed; defaults to --seed (set it to share a world)"},
             {"extent", "400", "world square side in meters"},
             {"wall-count", "60", "number of wall segments"},
             {"pole-count", "200", "number of reflective poles"},
             {"reflectivity-min", "0.3", "lower reflectivity bound"},
             {"reflectivity-max", "1.0", "upper reflectivity bound"},
             {"pose-count", "600", "trajectory length"},
             {"revisit-fraction", "0.3", "final fraction of poses that retrace the start"},
             {"query-of", "", "existing session to revisit instead of a fresh trajectory"},
             {"query-stride", "2", "pose subsampling when revisiting with query-of"},
             {"lidar-beams", "360", "lidar beams per sweep"},
             {"lidar-range-sigma", "0.02", "lidar range noise sigma in meters"},
             {"lidar-z-levels", "-0.5,0,0.5,1", "comma-separated vertical fan levels"},
             {"lidar-max-range", "80", "lidar return cutoff in meters"},
             {"radar-azimuth-bins", "120", "radar azimuth bins"},
             {"radar-range-bins", "200", "radar range bins"},
             {"radar-range-resolution", "0.5", "radar range bin size in meters"},
             {"speckle-sigma", "0.05", "multiplicative radar speckle sigma"},
             {"streak-probability", "0.1", "saturated-row probability per scan"},
             {"ghost-probability", "0.02", "ghost-echo probability per return"},
         }},
        {"submap",
         "aggregate each pose's neighborhood of lidar scans into a submap cloud",
         {
             {"input", nullptr, "session directory with poses.txt and lidar/"},
             {"output", nullptr, "directory for poses.txt and aggregated lidar/"},
             {"r-max", "80", "travel-distance bound in meters"},
             {"theta-max", "1.5707963267948966", "heading-change bound in radians"},
             {"z-min", "-1", "lower z cut in the center frame"},
             {"z-max", "3", "upper z cut in the center frame"},
         }},
        {"describe",
         "turn clouds or scans into ring x sector descriptors",
         {
             {"input", nullptr, "directory with poses.txt and lidar/ or radar/"},
             {"output", nullptr, "directory for poses.txt and descriptors/"},
             {"modality", nullptr, "lidar or radar"},
             {"rings", "40", "descriptor range rings"},
             {"sectors", "120", "descriptor azimuth sectors"},
             {"r-max", "80", "descriptor radius in meters"},
         }},
        {"train",
         "fit the embedding network on paired descriptors",
         {
             {"lidar", nullptr, "describe output directory for the lidar modality"},
             {"radar", nullptr, "describe output directory for the radar modality"},
             {"output", nullptr, "directory for checkpoints and history.csv"},
             {"seed", nullptr, "training seed (init, triplet sampling)"},
             {"loss-mode", "joint-L1",
              "joint-L1, combined-L1-2 or separate-per-modality"},
             {"margin", "1", "triplet margin"},
             {"alpha", "0.2", "weight of the modality-alignment term"},
             {"lr", "0.001", "Adam learning rate"},
             {"lr-decay", "0.9", "learning-rate factor applied after each epoch"},
             {"batch-size", "16", "triplets per optimizer step"},
             {"epochs", "6", "training epochs"},
             {"samples-per-epoch", "1400", "triplets sampled per epoch"},
             {"d-pos", "3", "positive pair distance in meters"},
             {"d-neg", "25", "negative pair distance in meters"},
             {"base-channels", "8", "network width"},
         }},
        {"embed",
         "push descriptors through a trained model (or none) into signatures",
         {
             {"input", nullptr, "describe output directory"},
             {"output", nullptr, "directory for poses.txt and signatures/"},
             {"checkpoint", "", "trained model; raw descriptor signatures when omitted"},
         }},
        {"retrieve",
         "rank database signatures for every query signature",
         {
             {"query", nullptr, "embed output directory with the queries"},
             {"database", nullptr, "embed output directory with the map"},
             {"output", nullptr, "directory for matches.csv"},
             {"k", "1", "matches kept per query"},
         }},
        {"eval",
         "score top-1 retrieval against ground-truth poses",
         {
             {"query", nullptr, "embed output directory with the queries"},
             {"database", nullptr, "embed output directory with the map"},
             {"output", nullptr, "directory for metrics.csv and pr.csv"},
             {"distance-threshold", "3", "true-match radius in meters"},
             {"pr-thresholds", "200", "thresholds swept for the PR curve"},
         }},
        {"loops",
         "detect within-session loop closures from signatures",
         {
             {"input", nullptr, "embed output directory for one session"},
             {"output", nullptr, "directory for loops.csv and similarity.csv"},
             {"threshold", "-0.2", "minimum similarity (similarity = -distance)"},
             {"exclusion-window", "50", "index gap that disqualifies trivial pairs"},
         }},
    };
    return table;
}

const CommandDef& find_command(const std::string& name) {
    for (const CommandDef& c : command_table())
        if (name == c.name) return c;
    std::string valid;
    for (const CommandDef& c : command_table()) {
        if (!valid.empty()) valid += ", ";
        valid += c.name;
    }
    throw UsageError("unknown command '" + name + "'; valid commands: " + valid);
}

void print_command_usage(FILE* out, const CommandDef& cmd) {
    std::fprintf(out, "usage: placerec %s [--config <file>] [--<key> <value> ...]\n\n%s\n\n",
                 cmd.name, cmd.summary);
    std::fprintf(out, "  %-24s %s\n", "--config <file>",
                 "key = value file; flags override it, it overrides defaults");
    for (const KeyDef& k : cmd.keys) {
        std::string label = std::string("--") + k.name + " <value>";
        if (k.fallback == nullptr)
            std::fprintf(out, "  %-24s %s (required)\n", label.c_str(), k.help);
        else if (k.fallback[0] == '\0')
            std::fprintf(out, "  %-24s %s\n", label.c_str(), k.help);
        else
            std::fprintf(out, "  %-24s %s (default %s)\n", label.c_str(), k.help,
                         k.fallback);
    }
}

void print_global_usage(FILE* out) {
    std::fprintf(out, "usage: placerec <command> [--config <file>] [--<key> <value> ...]\n\n");
    for (const CommandDef& c : command_table())
        std::fprintf(out, "  %-10s %s\n", c.name, c.summary);
    std::fprintf(out, "\nRun 'placerec <command> --help' for the full key table.\n");
}

class StageArgs {
public:
    explicit StageArgs(const CommandDef& cmd) : cmd_(cmd) {
        values_.resize(cmd.keys.size());
        for (std::size_t i = 0; i < cmd_.keys.size(); ++i)
            if (cmd_.keys[i].fallback) values_[i] = cmd_.keys[i].fallback;
    }

    void set(const std::string& key, const std::string& value) {
        for (std::size_t i = 0; i < cmd_.keys.size(); ++i) {
            if (key == cmd_.keys[i].name) {
                values_[i] = value;
                return;
            }
        }
        std::string valid;
        for (const KeyDef& k : cmd_.keys) {
            if (!valid.empty()) valid += ", ";
            valid += k.name;
        }
        throw UsageError("unknown key '" + key + "' for " + cmd_.name +
                         "; valid keys: " + valid);
    }

    void require_all_set() const {
        for (std::size_t i = 0; i < cmd_.keys.size(); ++i)
            if (!values_[i])
                throw UsageError(std::string("missing required --") + cmd_.keys[i].name +
                                 " for " + cmd_.name);
    }

    const std::string& get(const std::string& key) const {
        for (std::size_t i = 0; i < cmd_.keys.size(); ++i)
            if (key == cmd_.keys[i].name) return *values_[i];
        throw Error("internal: key '" + key + "' not in the " + std::string(cmd_.name) +
                    " table");
    }

    double get_double(const std::string& key) const {
        const std::string& v = get(key);
        errno = 0;
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (errno != 0 || end == v.c_str() || *end != '\0')
            throw UsageError("invalid value '" + v + "' for --" + key +
                             " (expected a number)");
        return x;
    }

    long long get_int(const std::string& key) const {
        const std::string& v = get(key);
        errno = 0;
        char* end = nullptr;
        const long long x = std::strtoll(v.c_str(), &end, 10);
        if (errno != 0 || end == v.c_str() || *end != '\0')
            throw UsageError("invalid value '" + v + "' for --" + key +
                             " (expected an integer)");
        return x;
    }

    std::uint64_t get_u64(const std::string& key) const {
        const std::string& v = get(key);
        if (!v.empty() && v[0] == '-')
            throw UsageError("invalid value '" + v + "' for --" + key +
                             " (expected a non-negative integer)");
        errno = 0;
        char* end = nullptr;
        const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (errno != 0 || end == v.c_str() || *end != '\0')
            throw UsageError("invalid value '" + v + "' for --" + key +
                             " (expected a non-negative integer)");
        return x;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        const std::string& v = get(key);
        std::vector<double> out;
        std::size_t pos = 0;
        while (pos <= v.size()) {
            const std::size_t comma = std::min(v.find(',', pos), v.size());
            const std::string item = v.substr(pos, comma - pos);
            errno = 0;
            char* end = nullptr;
            const double x = std::strtod(item.c_str(), &end);
            if (errno != 0 || end == item.c_str() || *end != '\0')
                throw UsageError("invalid value '" + v + "' for --" + key +
                                 " (expected comma-separated numbers)");
            out.push_back(x);
            pos = comma + 1;
        }
        return out;
    }

    KeyValues effective() const {
        KeyValues kv;
        for (std::size_t i = 0; i < cmd_.keys.size(); ++i)
            kv.emplace_back(cmd_.keys[i].name, values_[i] ? *values_[i] : "");
        return kv;
    }

private:
    const CommandDef& cmd_;
    std::vector<std::optional<std::string>> values_;
};

// Returns nothing when --help was requested; otherwise the fully merged
// key set with flag > config file > built-in default precedence.
std::optional<StageArgs> parse_stage(const CommandDef& cmd,
                                     const std::vector<std::string>& tokens) {
    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t == "--help") return std::nullopt;
        if (t.rfind("--", 0) != 0)
            throw UsageError("unexpected argument '" + t + "' (keys look like --key value)");
        const std::string key = t.substr(2);
        if (i + 1 >= tokens.size())
            throw UsageError("missing value for --" + key);
        const std::string& value = tokens[++i];
        if (key == "config")
            config_path = value;
        else
            flags.emplace_back(key, value);
    }

    StageArgs args(cmd);
    if (!config_path.empty()) {
        KeyValues kv;
        try {
            kv = read_key_value_file(config_path);
        } catch (const IoError& e) {
            throw UsageError(std::string("cannot use --config: ") + e.what());
        }
        for (const auto& [key, value] : kv) args.set(key, value);
    }
    for (const auto& [key, value] : flags) args.set(key, value);
    args.require_all_set();
    return args;
}

// --- dataset directory helpers ---

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(IoErrorKind::io_failure,
                          "cannot create directory " + dir.string() + ": " + ec.message());
}

Trajectory load_poses(const fs::path& dir) { return read_pose_file(dir / "poses.txt"); }

void check_no_extra(const fs::path& dir, std::size_t count) {
    if (fs::exists(indexed_file(dir, count)))
        throw IoError(IoErrorKind::shape_mismatch,
                      dir.string() + " holds more indexed files than poses");
}

std::vector<PointCloud3D> load_clouds(const fs::path& dir, std::size_t count) {
    std::vector<PointCloud3D> clouds;
    clouds.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        clouds.push_back(read_point_cloud(indexed_file(dir, i)));
    check_no_extra(dir, count);
    return clouds;
}

std::vector<RadarPolarScan> load_scans(const fs::path& dir, std::size_t count) {
    std::vector<RadarPolarScan> scans;
    scans.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        scans.push_back(read_radar_scan(indexed_file(dir, i)));
    check_no_extra(dir, count);
    return scans;
}

std::vector<PolarDescriptor> load_descriptors(const fs::path& dir, std::size_t count,
                                              std::optional<Modality> expected) {
    std::vector<PolarDescriptor> descs;
    descs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        descs.push_back(read_descriptor(indexed_file(dir, i)));
        if (expected && descs.back().modality != *expected)
            throw IoError(IoErrorKind::shape_mismatch,
                          indexed_file(dir, i).string() + " holds a " +
                              to_string(descs.back().modality) + " descriptor, expected " +
                              to_string(*expected));
    }
    check_no_extra(dir, count);
    return descs;
}

SignatureDatabase load_signature_db(const fs::path& dir) {
    const Trajectory traj = load_poses(dir);
    SignatureDatabase db;
    db.entries.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Eigen::MatrixXf sig = read_signature(indexed_file(dir / "signatures", i));
        db.entries.push_back({static_cast<int>(i), sig.cast<double>(), traj[i],
                              dir.filename().string()});
    }
    check_no_extra(dir / "signatures", traj.size());
    return db;
}

std::vector<Pose2D> poses_of(const SignatureDatabase& db) {
    std::vector<Pose2D> poses;
    poses.reserve(db.size());
    for (const SignatureEntry& e : db.entries) poses.push_back(e.pose);
    return poses;
}

// --- subcommands ---

void cmd_simulate(const StageArgs& a) {
    const std::uint64_t seed = a.get_u64("seed");

    WorldConfig wcfg;
    wcfg.extent = a.get_double("extent");
    wcfg.wall_count = static_cast<int>(a.get_int("wall-count"));
    wcfg.pole_count = static_cast<int>(a.get_int("pole-count"));
    wcfg.reflectivity_min = a.get_double("reflectivity-min");
    wcfg.reflectivity_max = a.get_double("reflectivity-max");
    wcfg.seed = a.get("world-seed").empty() ? seed : a.get_u64("world-seed");

    SensorConfig scfg;
    scfg.lidar_beams = static_cast<int>(a.get_int("lidar-beams"));
    scfg.lidar_range_sigma = a.get_double("lidar-range-sigma");
    scfg.lidar_z_levels = a.get_double_list("lidar-z-levels");
    scfg.lidar_max_range = a.get_double("lidar-max-range");
    scfg.radar_azimuth_bins = static_cast<int>(a.get_int("radar-azimuth-bins"));
    scfg.radar_range_bins = static_cast<int>(a.get_int("radar-range-bins"));
    scfg.radar_range_resolution = a.get_double("radar-range-resolution");
    scfg.speckle_sigma = a.get_double("speckle-sigma");
    scfg.streak_probability = a.get_double("streak-probability");
    scfg.ghost_probability = a.get_double("ghost-probability");

    const World world = generate_world(wcfg);
    Trajectory traj;
    if (a.get("query-of").empty()) {
        traj = generate_trajectory(world, static_cast<int>(a.get_int("pose-count")),
                                   a.get_double("revisit-fraction"), seed);
    } else {
        const Trajectory base = load_poses(a.get("query-of"));
        traj = make_query_trajectory(base, static_cast<int>(a.get_int("query-stride")),
                                     seed);
    }

    const fs::path out = a.get("output");
    ensure_directory(out / "lidar");
    ensure_directory(out / "radar");
    traj.session_id = out.filename().string();

    const Session session = render_session(world, traj, scfg, seed);
    write_pose_file(out / "poses.txt", session.trajectory);
    for (std::size_t i = 0; i < session.trajectory.size(); ++i) {
        write_point_cloud(indexed_file(out / "lidar", i), session.clouds[i]);
        write_radar_scan(indexed_file(out / "radar", i), session.scans[i]);
    }
    write_key_value_file(out / "meta.txt", a.effective());
}

void cmd_submap(const StageArgs& a) {
    const fs::path in = a.get("input");
    const Trajectory traj = load_poses(in);
    const std::vector<PointCloud3D> clouds = load_clouds(in / "lidar", traj.size());

    SubmapConfig cfg;
    cfg.r_max = a.get_double("r-max");
    cfg.theta_max = a.get_double("theta-max");
    cfg.z_min = a.get_double("z-min");
    cfg.z_max = a.get_double("z-max");

    const fs::path out = a.get("output");
    ensure_directory(out / "lidar");
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const SubmapBounds bounds = submap_bounds(traj, i, cfg);
        write_point_cloud(indexed_file(out / "lidar", i),
                          build_submap(traj, clouds, bounds, cfg));
    }
    write_pose_file(out / "poses.txt", traj);
}

void cmd_describe(const StageArgs& a) {
    const fs::path in = a.get("input");
    const Trajectory traj = load_poses(in);

    DescriptorConfig cfg;
    cfg.rings = static_cast<int>(a.get_int("rings"));
    cfg.sectors = static_cast<int>(a.get_int("sectors"));
    cfg.r_max = a.get_double("r-max");

    const std::string& modality = a.get("modality");
    if (modality != "lidar" && modality != "radar")
        throw UsageError("invalid value '" + modality +
                         "' for --modality (expected lidar or radar)");

    const fs::path out = a.get("output");
    ensure_directory(out / "descriptors");
    if (modality == "lidar") {
        const std::vector<PointCloud3D> clouds = load_clouds(in / "lidar", traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i)
            write_descriptor(indexed_file(out / "descriptors", i),
                             lidar_descriptor(clouds[i], cfg));
    } else {
        const std::vector<RadarPolarScan> scans = load_scans(in / "radar", traj.size());
        for (std::size_t i = 0; i < traj.size(); ++i)
            write_descriptor(indexed_file(out / "descriptors", i),
                             radar_descriptor(scans[i], cfg));
    }
    write_pose_file(out / "poses.txt", traj);
}

void cmd_train(const StageArgs& a) {
    const fs::path lidar_dir = a.get("lidar");
    const fs::path radar_dir = a.get("radar");
    const Trajectory traj = load_poses(lidar_dir);
    const Trajectory radar_traj = load_poses(radar_dir);
    if (radar_traj.size() != traj.size())
        throw Error("lidar and radar sessions disagree on pose count (" +
                    std::to_string(traj.size()) + " vs " +
                    std::to_string(radar_traj.size()) + ")");

    const TrainSet set = make_train_set(
        traj, load_descriptors(lidar_dir / "descriptors", traj.size(), Modality::lidar),
        load_descriptors(radar_dir / "descriptors", traj.size(), Modality::radar));

    TrainConfig cfg;
    cfg.margin = a.get_double("margin");
    cfg.alpha = a.get_double("alpha");
    cfg.lr = a.get_double("lr");
    cfg.lr_decay = a.get_double("lr-decay");
    cfg.batch_size = static_cast<int>(a.get_int("batch-size"));
    cfg.epochs = static_cast<int>(a.get_int("epochs"));
    cfg.samples_per_epoch = static_cast<int>(a.get_int("samples-per-epoch"));
    cfg.d_pos = a.get_double("d-pos");
    cfg.d_neg = a.get_double("d-neg");
    cfg.loss_mode = parse_loss_mode(a.get("loss-mode"));
    cfg.seed = a.get_u64("seed");
    cfg.base_channels = static_cast<int>(a.get_int("base-channels"));

    const TrainResult result = train(set, cfg);

    const fs::path out = a.get("output");
    ensure_directory(out);
    if (result.separate()) {
        write_checkpoint(out / "checkpoint_radar.bin", result.nets[0], result.opt[0],
                         result.opt[0].step, cfg.seed);
        write_checkpoint(out / "checkpoint_lidar.bin", result.nets[1], result.opt[1],
                         result.opt[1].step, cfg.seed);
    } else {
        write_checkpoint(out / "checkpoint.bin", result.nets[0], result.opt[0],
                         result.opt[0].step, cfg.seed);
    }

    std::vector<std::vector<std::string>> rows;
    rows.reserve(result.history.size());
    for (const LossRecord& r : result.history)
        rows.push_back({std::to_string(r.step), std::to_string(r.epoch),
                        format_double(r.loss), format_double(r.lr)});
    write_csv(out / "history.csv", {"step", "epoch", "loss", "lr"}, rows);
}

void cmd_embed(const StageArgs& a) {
    const fs::path in = a.get("input");
    const Trajectory traj = load_poses(in);
    const std::vector<PolarDescriptor> descs =
        load_descriptors(in / "descriptors", traj.size(), std::nullopt);

    std::optional<NetParams> params;
    if (!a.get("checkpoint").empty())
        params = read_checkpoint(a.get("checkpoint")).params;

    const fs::path out = a.get("output");
    ensure_directory(out / "signatures");
    for (std::size_t i = 0; i < descs.size(); ++i) {
        const Eigen::MatrixXd sig =
            params ? embed_signature(*params, descs[i]) : identity_signature(descs[i]);
        write_signature(indexed_file(out / "signatures", i), sig.cast<float>());
    }
    write_pose_file(out / "poses.txt", traj);
}

void cmd_retrieve(const StageArgs& a) {
    const SignatureDatabase queries = load_signature_db(a.get("query"));
    const SignatureDatabase db = load_signature_db(a.get("database"));
    const int k = static_cast<int>(a.get_int("k"));

    std::vector<std::vector<std::string>> rows;
    rows.reserve(queries.size() * static_cast<std::size_t>(std::max(k, 0)));
    for (const SignatureEntry& q : queries.entries)
        for (const RankedMatch& m : query_top_k(db, q.signature, k))
            rows.push_back({std::to_string(q.id), std::to_string(m.id),
                            format_double(m.distance)});

    const fs::path out = a.get("output");
    ensure_directory(out);
    write_csv(out / "matches.csv", {"query", "database", "distance"}, rows);
}

void cmd_eval(const StageArgs& a) {
    const SignatureDatabase queries = load_signature_db(a.get("query"));
    const SignatureDatabase db = load_signature_db(a.get("database"));

    EvalConfig cfg;
    cfg.distance_threshold = a.get_double("distance-threshold");
    cfg.pr_threshold_count = static_cast<int>(a.get_int("pr-thresholds"));

    std::vector<RankedMatch> top1;
    top1.reserve(queries.size());
    for (const SignatureEntry& q : queries.entries)
        top1.push_back(query_top_k(db, q.signature, 1)[0]);

    const std::vector<Pose2D> qposes = poses_of(queries);
    const std::vector<Pose2D> dbposes = poses_of(db);
    const Eigen::MatrixXi gt = ground_truth_matrix(qposes, dbposes, cfg.distance_threshold);
    const double recall = recall_at_1(top1, qposes, dbposes, cfg.distance_threshold);
    const PrCurve curve = pr_curve(top1, gt, cfg);

    const fs::path out = a.get("output");
    ensure_directory(out);
    write_csv(out / "metrics.csv", {"metric", "value"},
              {{"recall_at_1", format_double(recall)},
               {"max_f1", format_double(curve.max_f1)}});
    std::vector<std::vector<std::string>> rows;
    rows.reserve(curve.points.size());
    for (const PrPoint& p : curve.points)
        rows.push_back({format_double(p.threshold), format_double(p.precision),
                        format_double(p.recall)});
    write_csv(out / "pr.csv", {"threshold", "precision", "recall"}, rows);
}

void cmd_loops(const StageArgs& a) {
    const SignatureDatabase db = load_signature_db(a.get("input"));
    const SimilarityMatrix sim = similarity_matrix(db, db);
    const std::vector<std::pair<int, int>> loops = detect_loops(
        sim, a.get_double("threshold"), static_cast<int>(a.get_int("exclusion-window")));

    const fs::path out = a.get("output");
    ensure_directory(out);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(loops.size());
    for (const auto& [i, j] : loops)
        rows.push_back({std::to_string(sim.query_ids[i]), std::to_string(sim.db_ids[j]),
                        format_double(sim.values(i, j))});
    write_csv(out / "loops.csv", {"query", "database", "similarity"}, rows);

    std::vector<std::string> header;
    header.reserve(sim.db_ids.size() + 1);
    header.push_back("id");
    for (int id : sim.db_ids) header.push_back(std::to_string(id));
    std::vector<std::vector<std::string>> matrix_rows;
    matrix_rows.reserve(sim.query_ids.size());
    for (Eigen::Index i = 0; i < sim.values.rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(sim.db_ids.size() + 1);
        row.push_back(std::to_string(sim.query_ids[i]));
        for (Eigen::Index j = 0; j < sim.values.cols(); ++j)
            row.push_back(format_double(sim.values(i, j)));
        matrix_rows.push_back(std::move(row));
    }
    write_csv(out / "similarity.csv", header, matrix_rows);
}

int run(const std::vector<std::string>& args) {
    if (args.empty()) {
        print_global_usage(stderr);
        return 1;
    }
    if (args[0] == "--help" || args[0] == "help") {
        print_global_usage(stdout);
        return 0;
    }
    const CommandDef& cmd = find_command(args[0]);
    const std::optional<StageArgs> stage =
        parse_stage(cmd, {args.begin() + 1, args.end()});
    if (!stage) {
        print_command_usage(stdout, cmd);
        return 0;
    }

    if (args[0] == "simulate") cmd_simulate(*stage);
    else if (args[0] == "submap") cmd_submap(*stage);
    else if (args[0] == "describe") cmd_describe(*stage);
    else if (args[0] == "train") cmd_train(*stage);
    else if (args[0] == "embed") cmd_embed(*stage);
    else if (args[0] == "retrieve") cmd_retrieve(*stage);
    else if (args[0] == "eval") cmd_eval(*stage);
    else if (args[0] == "loops") cmd_loops(*stage);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run({argv + 1, argv + argc});
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
