#include "phasecool/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace phasecool {

namespace {

struct Item {
    std::string value;
    int line = 0;
    int key_col = 0;
    int val_col = 0;
};

[[noreturn]] void fail(const std::string& origin, int line, int col, const std::string& msg) {
    throw ValidationError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + msg);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// One section's key -> item map with strict duplicate/unknown-key handling.
class Section {
  public:
    Section(std::string name, const std::string& origin) : name_(std::move(name)), origin_(origin) {}

    void add(const std::string& key, Item item) {
        if (items_.count(key))
            fail(origin_, item.line, item.key_col,
                 "duplicate key '" + key + "' in section [" + name_ + "]");
        items_.emplace(key, std::move(item));
    }

    const Item* take(const std::string& key) {
        auto it = items_.find(key);
        if (it == items_.end()) return nullptr;
        taken_.push_back(key);
        return &it->second;
    }

    void reject_leftovers() const {
        for (const auto& [key, item] : items_) {
            bool known = false;
            for (const auto& t : taken_) known = known || t == key;
            if (!known)
                fail(origin_, item.line, item.key_col,
                     "unknown key '" + key + "' in section [" + name_ + "]");
        }
    }

  private:
    std::string name_;
    const std::string& origin_;
    std::map<std::string, Item> items_;
    std::vector<std::string> taken_;
};

double parse_double(const Item& it, const std::string& origin) {
    const std::string& s = it.value;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(origin, it.line, it.val_col, "expected a number, got '" + s + "'");
    if (!std::isfinite(v)) fail(origin, it.line, it.val_col, "value must be finite");
    return v;
}

long long parse_int(const Item& it, const std::string& origin) {
    const std::string& s = it.value;
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(origin, it.line, it.val_col, "expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const Item& it, const std::string& origin) {
    const std::string& s = it.value;
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail(origin, it.line, it.val_col, "expected a non-negative integer, got '" + s + "'");
    return v;
}

bool parse_bool(const Item& it, const std::string& origin) {
    if (it.value == "true") return true;
    if (it.value == "false") return false;
    fail(origin, it.line, it.val_col, "expected true or false, got '" + it.value + "'");
}

std::vector<double> parse_list(const Item& it, const std::string& origin) {
    std::vector<double> out;
    const std::string& s = it.value;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        const auto token = trim(std::string_view(s).substr(start, comma - start));
        const int col = it.val_col + static_cast<int>(start);
        if (token.empty()) fail(origin, it.line, col, "empty entry in number list");
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v))
            fail(origin, it.line, col,
                 "expected a number, got '" + std::string(token) + "'");
        out.push_back(v);
        start = comma + 1;
        if (comma == s.size()) break;
    }
    return out;
}

void wrap(const std::string& origin, const Item& it, const std::function<void()>& build) {
    // domain validators know the invariant; prepend the position
    try {
        build();
    } catch (const ValidationError& e) {
        fail(origin, it.line, it.val_col, e.what());
    }
}

const char* kSections[] = {"oscillator", "drive",    "sim",    "initial", "feedback",
                           "modes",      "ensemble", "output", "results"};

} // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    std::map<std::string, Section> sections;
    std::string current;
    bool in_results = false;

    std::istringstream stream(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(stream, raw)) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;

        if (line.front() == '[') {
            if (line.back() != ']')
                fail(origin, lineno, indent, "unterminated section header");
            const std::string name(trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const char* s : kSections) known = known || name == s;
            if (!known) fail(origin, lineno, indent, "unknown section [" + name + "]");
            in_results = name == "results";
            current = name;
            if (!in_results) sections.try_emplace(current, current, origin);
            continue;
        }
        if (in_results) continue;  // summary sidecars append run results here
        if (current.empty())
            fail(origin, lineno, indent, "key outside any section");

        const std::size_t eq = raw.find('=');
        if (eq == std::string::npos)
            fail(origin, lineno, indent + static_cast<int>(line.size()), "expected 'key = value'");
        const std::string key(trim(std::string_view(raw).substr(0, eq)));
        if (key.empty()) fail(origin, lineno, indent, "empty key");
        const auto val_view = trim(std::string_view(raw).substr(eq + 1));
        if (val_view.empty())
            fail(origin, lineno, static_cast<int>(eq) + 2, "empty value for key '" + key + "'");
        Item item;
        item.value = std::string(val_view);
        item.line = lineno;
        item.key_col = indent;
        item.val_col = static_cast<int>(val_view.data() - raw.data()) + 1;
        sections.at(current).add(key, std::move(item));
    }

    auto section = [&](const char* name) -> Section& {
        auto it = sections.find(name);
        if (it == sections.end()) it = sections.try_emplace(name, name, origin).first;
        return it->second;
    };

    ExperimentConfig cfg;

    {
        Section& s = section("oscillator");
        double omega = 1.0, gamma = 0.0, n_th = 0.0;
        Item at{"", 1, 1, 1};
        if (const Item* it = s.take("omega")) omega = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("gamma")) gamma = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("n_th")) n_th = parse_double(*it, origin), at = *it;
        wrap(origin, at, [&] { cfg.oscillator = make_oscillator(omega, gamma, n_th); });
        s.reject_leftovers();
    }
    {
        Section& s = section("drive");
        double b = 0.0, phi = 0.0;
        Item at{"", 1, 1, 1};
        if (const Item* it = s.take("b")) b = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("phi")) phi = parse_double(*it, origin), at = *it;
        wrap(origin, at, [&] { cfg.drive = make_drive(b, phi, cfg.oscillator); });
        s.reject_leftovers();
    }
    {
        Section& s = section("sim");
        cfg.sim.dt = 1e-3;
        cfg.sim.t_end = 100.0;
        bool noisy = false;
        double noise_n_th = -1.0;
        Item at{"", 1, 1, 1};
        if (const Item* it = s.take("dt")) cfg.sim.dt = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("t_end")) cfg.sim.t_end = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("integrator")) {
            if (it->value == "rotation_splitting")
                cfg.sim.integrator = Integrator::rotation_splitting;
            else if (it->value == "transfer_matrix")
                cfg.sim.integrator = Integrator::transfer_matrix;
            else
                fail(origin, it->line, it->val_col,
                     "integrator must be rotation_splitting or transfer_matrix");
        }
        if (const Item* it = s.take("noise")) {
            if (it->value == "classical")
                noisy = true;
            else if (it->value != "off")
                fail(origin, it->line, it->val_col, "noise must be off or classical");
            at = *it;
        }
        if (const Item* it = s.take("noise_n_th"))
            noise_n_th = parse_double(*it, origin), at = *it;
        if (const Item* it = s.take("stride")) {
            const long long v = parse_int(*it, origin);
            if (v < 1) fail(origin, it->line, it->val_col, "stride must be >= 1");
            cfg.sim.sample_stride = static_cast<int>(v);
        }
        if (const Item* it = s.take("seed")) cfg.sim.seed = parse_u64(*it, origin);
        if (noisy) {
            if (noise_n_th < 0.0) noise_n_th = cfg.oscillator.n_th;
            cfg.sim.noise = NoiseSpec::classical(noise_n_th);
        } else if (noise_n_th >= 0.0) {
            fail(origin, at.line, at.val_col, "noise_n_th given but noise is off");
        }
        wrap(origin, at, [&] { validate(cfg.sim); });
        s.reject_leftovers();
    }
    {
        Section& s = section("initial");
        Item at{"", 1, 1, 1};
        if (const Item* it = s.take("kind")) {
            if (it->value == "thermal")
                cfg.initial.kind = InitialSpec::Kind::thermal;
            else if (it->value == "fixed")
                cfg.initial.kind = InitialSpec::Kind::fixed;
            else
                fail(origin, it->line, it->val_col, "kind must be thermal or fixed");
        }
        if (const Item* it = s.take("q")) cfg.initial.q = parse_double(*it, origin);
        if (const Item* it = s.take("p")) cfg.initial.p = parse_double(*it, origin);
        if (const Item* it = s.take("n0")) {
            cfg.initial.n0 = parse_double(*it, origin);
            if (cfg.initial.n0 < 0.0)
                fail(origin, it->line, it->val_col, "initial.n0 must be >= 0");
        }
        if (cfg.initial.n0 < 0.0) cfg.initial.n0 = cfg.oscillator.n_th;
        s.reject_leftovers();
    }
    {
        Section& s = section("feedback");
        if (const Item* it = s.take("mode")) {
            if (it->value == "none")
                cfg.feedback = FeedbackKind::none;
            else if (it->value == "single_shot")
                cfg.feedback = FeedbackKind::single_shot;
            else if (it->value == "fixed_interval")
                cfg.feedback = FeedbackKind::fixed_interval;
            else if (it->value == "per_segment")
                cfg.feedback = FeedbackKind::per_segment;
            else
                fail(origin, it->line, it->val_col,
                     "mode must be none, single_shot, fixed_interval or per_segment");
        }
        if (const Item* it = s.take("delta_tau")) {
            cfg.feedback_settings.delta_tau = parse_double(*it, origin);
            if (cfg.feedback_settings.delta_tau < 0.0)
                fail(origin, it->line, it->val_col, "feedback.delta_tau must be >= 0");
        }
        if (const Item* it = s.take("max_updates")) {
            const long long v = parse_int(*it, origin);
            if (v < 0) fail(origin, it->line, it->val_col, "feedback.max_updates must be >= 0");
            cfg.feedback_settings.max_updates = static_cast<int>(v);
        }
        if (const Item* it = s.take("cap")) {
            cfg.feedback_settings.cap = parse_double(*it, origin);
            if (cfg.feedback_settings.cap <= 0.0)
                fail(origin, it->line, it->val_col, "feedback.cap must be > 0");
        }
        if (cfg.feedback == FeedbackKind::fixed_interval &&
            !(cfg.feedback_settings.delta_tau > 0.0))
            throw ValidationError(origin +
                                  ": feedback.delta_tau must be > 0 for fixed_interval mode");
        cfg.feedback_settings.per_segment = cfg.feedback == FeedbackKind::per_segment;
        s.reject_leftovers();
    }
    {
        Section& s = section("modes");
        const Item* omegas = s.take("omegas");
        cfg.modes.gamma_rel = cfg.oscillator.omega > 0.0
                                  ? cfg.oscillator.gamma / cfg.oscillator.omega
                                  : 0.0;
        cfg.modes.n_th = cfg.oscillator.n_th;
        if (omegas) {
            cfg.modes.present = true;
            cfg.modes.omegas = parse_list(*omegas, origin);
        }
        if (const Item* it = s.take("gamma_rel")) {
            cfg.modes.gamma_rel = parse_double(*it, origin);
            if (cfg.modes.gamma_rel < 0.0)
                fail(origin, it->line, it->val_col, "modes.gamma_rel must be >= 0");
        }
        if (const Item* it = s.take("n_th")) {
            cfg.modes.n_th = parse_double(*it, origin);
            if (cfg.modes.n_th < 0.0)
                fail(origin, it->line, it->val_col, "modes.n_th must be >= 0");
        }
        if (const Item* it = s.take("resolution"))
            cfg.modes.resolution = parse_double(*it, origin);
        if (const Item* it = s.take("update_half_periods")) {
            const long long v = parse_int(*it, origin);
            if (v < 1)
                fail(origin, it->line, it->val_col, "modes.update_half_periods must be >= 1");
            cfg.modes.settings.update_half_periods = static_cast<int>(v);
        }
        if (const Item* it = s.take("max_updates")) {
            const long long v = parse_int(*it, origin);
            if (v < 0) fail(origin, it->line, it->val_col, "modes.max_updates must be >= 0");
            cfg.modes.settings.max_updates = static_cast<int>(v);
        }
        if (const Item* it = s.take("shared_drive"))
            cfg.modes.settings.shared_drive = parse_bool(*it, origin);
        if (const Item* it = s.take("drive_degenerate"))
            cfg.modes.settings.drive_degenerate = parse_bool(*it, origin);
        if (const Item* it = s.take("gate_rel")) {
            cfg.modes.settings.gate_rel = parse_double(*it, origin);
            if (cfg.modes.settings.gate_rel < 0.0)
                fail(origin, it->line, it->val_col, "modes.gate_rel must be >= 0");
        }
        if (!cfg.modes.present) {
            cfg.modes.omegas.clear();
        } else if (omegas) {
            wrap(origin, *omegas, [&] { (void)build_mode_set(cfg); });
        }
        s.reject_leftovers();
    }
    {
        Section& s = section("ensemble");
        if (const Item* it = s.take("count")) {
            const long long v = parse_int(*it, origin);
            if (v < 0) fail(origin, it->line, it->val_col, "ensemble.count must be >= 0");
            cfg.ensemble_count = static_cast<int>(v);
        }
        s.reject_leftovers();
    }
    {
        Section& s = section("output");
        if (const Item* it = s.take("dir")) cfg.out_dir = it->value;
        if (const Item* it = s.take("prefix")) cfg.prefix = it->value;
        if (cfg.out_dir.empty()) throw ValidationError(origin + ": output.dir must not be empty");
        if (cfg.prefix.empty())
            throw ValidationError(origin + ": output.prefix must not be empty");
        s.reject_leftovers();
    }

    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on config file: " + path);
    return parse_config(buf.str(), path);
}

std::string manifest_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[oscillator]\n";
    out << "omega = " << format_double(cfg.oscillator.omega) << "\n";
    out << "gamma = " << format_double(cfg.oscillator.gamma) << "\n";
    out << "n_th = " << format_double(cfg.oscillator.n_th) << "\n";
    out << "\n[drive]\n";
    out << "b = " << format_double(cfg.drive.b) << "\n";
    out << "phi = " << format_double(cfg.drive.phi) << "\n";
    out << "\n[sim]\n";
    out << "dt = " << format_double(cfg.sim.dt) << "\n";
    out << "t_end = " << format_double(cfg.sim.t_end) << "\n";
    out << "integrator = "
        << (cfg.sim.integrator == Integrator::transfer_matrix ? "transfer_matrix"
                                                              : "rotation_splitting")
        << "\n";
    out << "noise = " << (cfg.sim.noise.enabled ? "classical" : "off") << "\n";
    if (cfg.sim.noise.enabled)
        out << "noise_n_th = " << format_double(cfg.sim.noise.n_th) << "\n";
    out << "stride = " << cfg.sim.sample_stride << "\n";
    out << "seed = " << cfg.sim.seed << "\n";
    out << "\n[initial]\n";
    out << "kind = " << (cfg.initial.kind == InitialSpec::Kind::fixed ? "fixed" : "thermal")
        << "\n";
    out << "q = " << format_double(cfg.initial.q) << "\n";
    out << "p = " << format_double(cfg.initial.p) << "\n";
    // hand-assembled configs may still carry the unresolved sentinel
    out << "n0 = " << format_double(cfg.initial.n0 < 0.0 ? cfg.oscillator.n_th : cfg.initial.n0)
        << "\n";
    out << "\n[feedback]\n";
    const char* fb = "none";
    if (cfg.feedback == FeedbackKind::single_shot) fb = "single_shot";
    if (cfg.feedback == FeedbackKind::fixed_interval) fb = "fixed_interval";
    if (cfg.feedback == FeedbackKind::per_segment) fb = "per_segment";
    out << "mode = " << fb << "\n";
    out << "delta_tau = " << format_double(cfg.feedback_settings.delta_tau) << "\n";
    out << "max_updates = " << cfg.feedback_settings.max_updates << "\n";
    out << "cap = " << format_double(cfg.feedback_settings.cap) << "\n";
    if (cfg.modes.present) {
        out << "\n[modes]\n";
        out << "omegas = ";
        for (std::size_t i = 0; i < cfg.modes.omegas.size(); ++i)
            out << (i ? ", " : "") << format_double(cfg.modes.omegas[i]);
        out << "\n";
        out << "gamma_rel = " << format_double(cfg.modes.gamma_rel) << "\n";
        out << "n_th = " << format_double(cfg.modes.n_th) << "\n";
        out << "resolution = " << format_double(cfg.modes.resolution) << "\n";
        out << "update_half_periods = " << cfg.modes.settings.update_half_periods << "\n";
        out << "max_updates = " << cfg.modes.settings.max_updates << "\n";
        out << "shared_drive = " << (cfg.modes.settings.shared_drive ? "true" : "false") << "\n";
        out << "drive_degenerate = "
            << (cfg.modes.settings.drive_degenerate ? "true" : "false") << "\n";
        out << "gate_rel = " << format_double(cfg.modes.settings.gate_rel) << "\n";
    }
    out << "\n[ensemble]\n";
    out << "count = " << cfg.ensemble_count << "\n";
    out << "\n[output]\n";
    out << "dir = " << cfg.out_dir << "\n";
    out << "prefix = " << cfg.prefix << "\n";
    return out.str();
}

ModeSet build_mode_set(const ExperimentConfig& cfg) {
    if (!cfg.modes.present || cfg.modes.omegas.empty())
        throw ValidationError("config: a [modes] section with an omegas list is required for "
                              "multimode runs");
    std::vector<OscillatorParams> modes;
    modes.reserve(cfg.modes.omegas.size());
    for (double w : cfg.modes.omegas)
        modes.push_back(make_oscillator(w, cfg.modes.gamma_rel * w, cfg.modes.n_th));
    return make_mode_set(modes, cfg.drive.b, cfg.modes.resolution);
}

} // namespace phasecool
