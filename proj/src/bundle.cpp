#include "sceneparse/bundle.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sceneparse/errors.hpp"

namespace sceneparse {

void RunConfig::validate() const {
    if (image_side < 16) throw ConfigError("image side must be >= 16");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split ratio must be in (0,1)");
    if (segmenter != "grid" && segmenter != "slic") throw ConfigError("segmenter must be grid or slic");
    if (superpixels < 4) throw ConfigError("superpixel count must be >= 4");
    if (blocks_per_side < 1) throw ConfigError("blocks per side must be >= 1");
    if (!(compactness > 0.0)) throw ConfigError("compactness must be > 0");
    if (slic_iters < 1) throw ConfigError("slic iteration count must be >= 1");
    GAConfig ga;
    ga.population = ga_population;
    ga.generations = ga_generations;
    ga.p_crossover = ga_crossover;
    ga.p_mutation = ga_mutation;
    ga.alpha = ga_alpha;
    ga.beta = ga_beta;
    ga.elitism = ga_elitism;
    ga.validate();
    if (!(ga_val_fraction > 0.0 && ga_val_fraction < 1.0))
        throw ConfigError("ga validation fraction must be in (0,1)");
    if (ga_sample_cap < 8) throw ConfigError("ga sample cap must be >= 8");
    if (ova_l2 < 0.0) throw ConfigError("ova l2 must be >= 0");
    TrainSchedule sched;
    sched.lr0 = mlp_lr0;
    sched.batch = mlp_batch;
    sched.epochs = mlp_epochs;
    sched.hidden = mlp_hidden;
    sched.validate();
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw ModelError("failed to format a floating-point value");
    return std::string(buf, res.ptr);
}

namespace {

class BundleWriter {
public:
    explicit BundleWriter(std::ostream& out) : out_(out) {}

    void line(const std::string& text) { out_ << text << '\n'; }

    template <typename It>
    void numbers(const std::string& prefix, It first, It last) {
        out_ << prefix;
        for (It it = first; it != last; ++it) out_ << ' ' << format(*it);
        out_ << '\n';
    }

private:
    static std::string format(double v) { return fmt_double(v); }
    static std::string format(std::int64_t v) { return std::to_string(v); }

    std::ostream& out_;
};

class BundleReader {
public:
    explicit BundleReader(std::istream& in) : in_(in) {}

    void enter(const std::string& section) {
        section_ = section;
        expect(section);
    }

    void expect(const std::string& literal) {
        const std::string tok = token();
        if (tok != literal)
            throw ModelError("bundle section " + section_ + ": expected '" + literal + "', got '" + tok + "'");
    }

    std::string token() {
        std::string tok;
        if (!(in_ >> tok)) throw ModelError("bundle truncated in section " + section_);
        return tok;
    }

    std::string rest_of_line() {
        std::string text;
        std::getline(in_, text);
        if (!text.empty() && text.front() == ' ') text.erase(0, 1);
        if (text.empty()) throw ModelError("bundle section " + section_ + ": missing value");
        return text;
    }

    std::int64_t integer() {
        const std::string tok = token();
        std::int64_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ModelError("bundle section " + section_ + ": bad integer '" + tok + "'");
        return v;
    }

    double real() {
        const std::string tok = token();
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ModelError("bundle section " + section_ + ": bad number '" + tok + "'");
        return v;
    }

    const std::string& section() const { return section_; }

private:
    std::istream& in_;
    std::string section_ = "(header)";
};

void write_config(BundleWriter& w, const RunConfig& c) {
    w.line("[config]");
    w.line("seed = " + std::to_string(c.seed));
    w.line("image-side = " + std::to_string(c.image_side));
    w.line("split-ratio = " + fmt_double(c.split_ratio));
    w.line("segmenter = " + c.segmenter);
    w.line("superpixels = " + std::to_string(c.superpixels));
    w.line("blocks-per-side = " + std::to_string(c.blocks_per_side));
    w.line("compactness = " + fmt_double(c.compactness));
    w.line("slic-iters = " + std::to_string(c.slic_iters));
    w.line("use-ga = " + std::to_string(c.use_ga ? 1 : 0));
    w.line("ga-population = " + std::to_string(c.ga_population));
    w.line("ga-generations = " + std::to_string(c.ga_generations));
    w.line("ga-crossover = " + fmt_double(c.ga_crossover));
    w.line("ga-mutation = " + fmt_double(c.ga_mutation));
    w.line("ga-alpha = " + fmt_double(c.ga_alpha));
    w.line("ga-beta = " + fmt_double(c.ga_beta));
    w.line("ga-elitism = " + std::to_string(c.ga_elitism));
    w.line("ga-val-fraction = " + fmt_double(c.ga_val_fraction));
    w.line("ga-sample-cap = " + std::to_string(c.ga_sample_cap));
    w.line("ova-l2 = " + fmt_double(c.ova_l2));
    w.line("use-context = " + std::to_string(c.use_context ? 1 : 0));
    w.line("mlp-hidden = " + std::to_string(c.mlp_hidden));
    w.line("mlp-epochs = " + std::to_string(c.mlp_epochs));
    w.line("mlp-lr0 = " + fmt_double(c.mlp_lr0));
    w.line("mlp-batch = " + std::to_string(c.mlp_batch));
}

RunConfig read_config(BundleReader& r) {
    RunConfig c;
    r.enter("[config]");
    auto key = [&](const char* name) {
        r.expect(name);
        r.expect("=");
    };
    key("seed");
    c.seed = static_cast<std::uint64_t>(r.integer());
    key("image-side");
    c.image_side = static_cast<int>(r.integer());
    key("split-ratio");
    c.split_ratio = r.real();
    key("segmenter");
    c.segmenter = r.token();
    key("superpixels");
    c.superpixels = static_cast<int>(r.integer());
    key("blocks-per-side");
    c.blocks_per_side = static_cast<int>(r.integer());
    key("compactness");
    c.compactness = r.real();
    key("slic-iters");
    c.slic_iters = static_cast<int>(r.integer());
    key("use-ga");
    c.use_ga = r.integer() != 0;
    key("ga-population");
    c.ga_population = static_cast<int>(r.integer());
    key("ga-generations");
    c.ga_generations = static_cast<int>(r.integer());
    key("ga-crossover");
    c.ga_crossover = r.real();
    key("ga-mutation");
    c.ga_mutation = r.real();
    key("ga-alpha");
    c.ga_alpha = r.real();
    key("ga-beta");
    c.ga_beta = r.real();
    key("ga-elitism");
    c.ga_elitism = static_cast<int>(r.integer());
    key("ga-val-fraction");
    c.ga_val_fraction = r.real();
    key("ga-sample-cap");
    c.ga_sample_cap = static_cast<int>(r.integer());
    key("ova-l2");
    c.ova_l2 = r.real();
    key("use-context");
    c.use_context = r.integer() != 0;
    key("mlp-hidden");
    c.mlp_hidden = static_cast<int>(r.integer());
    key("mlp-epochs");
    c.mlp_epochs = static_cast<int>(r.integer());
    key("mlp-lr0");
    c.mlp_lr0 = r.real();
    key("mlp-batch");
    c.mlp_batch = static_cast<int>(r.integer());
    return c;
}

} // namespace

void ModelBundle::validate() const {
    config.validate();
    classes.validate();
    const int c = n_classes();
    if (c < 1) throw ModelError("bundle has no classes");
    if (catalog_version != default_catalog().version)
        throw ModelError("bundle feature catalog version " + std::to_string(catalog_version) +
                         " does not match this build (" + std::to_string(default_catalog().version) + ")");
    const auto t = static_cast<std::size_t>(default_catalog().total_dims());
    if (mask.bits.size() != t) throw ModelError("feature mask length does not match catalog");
    if (mask.s_count() < 1) throw ModelError("feature mask selects no features");
    if (standardizer.mean.size() != t || standardizer.stddev.size() != t)
        throw ModelError("standardizer width does not match catalog");
    for (const auto s : standardizer.stddev)
        if (!(s > 0.0) || !std::isfinite(s)) throw ModelError("standardizer contains a non-positive scale");
    if (classifiers.size() != static_cast<std::size_t>(c)) throw ModelError("classifier count does not match classes");
    const auto expect_w = static_cast<std::size_t>(mask.s_count()) + 1;
    for (const auto& clf : classifiers) {
        if (clf.weights.size() != expect_w) throw ModelError("classifier weight width does not match mask");
        for (const auto w : clf.weights)
            if (!std::isfinite(w)) throw ModelError("classifier weights are not finite");
    }
    if (priors.m1.n_classes != c || priors.m1.counts.size() != static_cast<std::size_t>(c) * c)
        throw ModelError("adjacency prior shape does not match classes");
    const int b = config.blocks_per_side * config.blocks_per_side;
    if (priors.m2.n_blocks != b || priors.m2.n_classes != c ||
        priors.m2.counts.size() != static_cast<std::size_t>(b) * c * b * c)
        throw ModelError("block prior shape does not match configuration");
    if (mlp.n_inputs != 3 * c || mlp.n_classes != c) throw ModelError("mlp shape does not match classes");
    if (mlp.w1.rows != static_cast<std::size_t>(mlp.n_hidden) || mlp.w1.cols != static_cast<std::size_t>(mlp.n_inputs) ||
        mlp.w2.rows != static_cast<std::size_t>(mlp.n_classes) || mlp.w2.cols != static_cast<std::size_t>(mlp.n_hidden) ||
        mlp.b1.size() != static_cast<std::size_t>(mlp.n_hidden) || mlp.b2.size() != static_cast<std::size_t>(mlp.n_classes))
        throw ModelError("mlp parameter shapes are inconsistent");
    for (const auto v : mlp.w1.data)
        if (!std::isfinite(v)) throw ModelError("mlp weights are not finite");
    for (const auto v : mlp.w2.data)
        if (!std::isfinite(v)) throw ModelError("mlp weights are not finite");
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
    bundle.validate();
    std::ostringstream out;
    BundleWriter w(out);
    w.line("sceneparse-bundle format " + std::to_string(bundle.format_version));
    write_config(w, bundle.config);

    w.line("[classes]");
    w.line("count " + std::to_string(bundle.n_classes()));
    for (std::size_t i = 0; i < bundle.classes.names.size(); ++i)
        w.line("name " + std::to_string(i) + " " + bundle.classes.names[i]);
    w.line("groups " + std::to_string(bundle.classes.grouping.size()));
    for (const auto& [raw, idx] : bundle.classes.grouping)
        w.line("group " + std::to_string(raw) + " -> " + std::to_string(idx));

    w.line("[catalog]");
    w.line("version " + std::to_string(bundle.catalog_version));
    w.line("dims " + std::to_string(bundle.standardizer.mean.size()));

    w.line("[standardizer]");
    w.numbers("mean", bundle.standardizer.mean.begin(), bundle.standardizer.mean.end());
    w.numbers("std", bundle.standardizer.stddev.begin(), bundle.standardizer.stddev.end());

    w.line("[mask]");
    w.line("bits " + mask_to_string(bundle.mask));

    w.line("[classifiers]");
    w.line("count " + std::to_string(bundle.classifiers.size()));
    for (const auto& clf : bundle.classifiers) {
        w.line("classifier " + std::to_string(clf.class_index) + " " +
               (clf.degenerate ? "degenerate" : "ok") + " l2 " + fmt_double(clf.l2));
        w.numbers("weights", clf.weights.begin(), clf.weights.end());
    }

    w.line("[m1]");
    w.line("classes " + std::to_string(bundle.priors.m1.n_classes));
    for (int a = 0; a < bundle.priors.m1.n_classes; ++a) {
        const auto* row = bundle.priors.m1.counts.data() + static_cast<std::size_t>(a) * bundle.priors.m1.n_classes;
        w.numbers("row", row, row + bundle.priors.m1.n_classes);
    }

    w.line("[m2]");
    w.line("blocks " + std::to_string(bundle.priors.m2.n_blocks) + " classes " +
           std::to_string(bundle.priors.m2.n_classes));
    {
        const std::size_t row_len = static_cast<std::size_t>(bundle.priors.m2.n_blocks) * bundle.priors.m2.n_classes;
        for (int p = 0; p < bundle.priors.m2.n_blocks; ++p) {
            for (int a = 0; a < bundle.priors.m2.n_classes; ++a) {
                const auto* row = bundle.priors.m2.counts.data() +
                                  (static_cast<std::size_t>(p) * bundle.priors.m2.n_classes + a) * row_len;
                w.numbers("row " + std::to_string(p) + " " + std::to_string(a), row, row + row_len);
            }
        }
    }

    w.line("[mlp]");
    w.line("inputs " + std::to_string(bundle.mlp.n_inputs) + " hidden " + std::to_string(bundle.mlp.n_hidden) +
           " classes " + std::to_string(bundle.mlp.n_classes));
    for (std::size_t h = 0; h < bundle.mlp.w1.rows; ++h) {
        const auto row = bundle.mlp.w1.row(h);
        w.numbers("w1", row.data(), row.data() + row.size());
    }
    w.numbers("b1", bundle.mlp.b1.begin(), bundle.mlp.b1.end());
    for (std::size_t c = 0; c < bundle.mlp.w2.rows; ++c) {
        const auto row = bundle.mlp.w2.row(c);
        w.numbers("w2", row.data(), row.data() + row.size());
    }
    w.numbers("b2", bundle.mlp.b2.begin(), bundle.mlp.b2.end());
    w.line("[end]");

    std::ofstream file(path, std::ios::binary);
    if (!file) throw ModelError("cannot open bundle file for writing: " + path.string());
    const std::string text = out.str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw ModelError("failed writing bundle file: " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ModelError("cannot open bundle file: " + path.string());
    BundleReader r(file);

    ModelBundle bundle;
    r.expect("sceneparse-bundle");
    r.expect("format");
    bundle.format_version = static_cast<int>(r.integer());
    if (bundle.format_version != 1)
        throw ModelError("unsupported bundle format version " + std::to_string(bundle.format_version));

    bundle.config = read_config(r);

    r.enter("[classes]");
    r.expect("count");
    const auto n_classes = static_cast<int>(r.integer());
    if (n_classes < 1) throw ModelError("bundle class count must be >= 1");
    bundle.classes.names.resize(static_cast<std::size_t>(n_classes));
    for (int i = 0; i < n_classes; ++i) {
        r.expect("name");
        const auto idx = static_cast<std::size_t>(r.integer());
        if (idx >= bundle.classes.names.size()) throw ModelError("bundle class index out of range");
        bundle.classes.names[idx] = r.rest_of_line();
    }
    r.expect("groups");
    const auto n_groups = static_cast<std::size_t>(r.integer());
    for (std::size_t i = 0; i < n_groups; ++i) {
        r.expect("group");
        const auto raw = static_cast<std::int32_t>(r.integer());
        r.expect("->");
        bundle.classes.grouping[raw] = static_cast<std::int32_t>(r.integer());
    }

    r.enter("[catalog]");
    r.expect("version");
    bundle.catalog_version = static_cast<int>(r.integer());
    r.expect("dims");
    const auto dims = static_cast<std::size_t>(r.integer());

    r.enter("[standardizer]");
    bundle.standardizer.mean.resize(dims);
    bundle.standardizer.stddev.resize(dims);
    r.expect("mean");
    for (auto& v : bundle.standardizer.mean) v = r.real();
    r.expect("std");
    for (auto& v : bundle.standardizer.stddev) v = r.real();

    r.enter("[mask]");
    r.expect("bits");
    bundle.mask = mask_from_string(r.token());

    r.enter("[classifiers]");
    r.expect("count");
    const auto n_clf = static_cast<std::size_t>(r.integer());
    bundle.classifiers.resize(n_clf);
    const std::size_t weight_len = static_cast<std::size_t>(bundle.mask.s_count()) + 1;
    for (std::size_t i = 0; i < n_clf; ++i) {
        r.expect("classifier");
        BinaryClassifier& clf = bundle.classifiers[i];
        clf.class_index = static_cast<int>(r.integer());
        const std::string state = r.token();
        if (state == "degenerate")
            clf.degenerate = true;
        else if (state != "ok")
            throw ModelError("bundle section [classifiers]: bad state '" + state + "'");
        r.expect("l2");
        clf.l2 = r.real();
        r.expect("weights");
        clf.weights.resize(weight_len);
        for (auto& v : clf.weights) v = r.real();
    }

    r.enter("[m1]");
    r.expect("classes");
    bundle.priors.m1.n_classes = static_cast<int>(r.integer());
    bundle.priors.m1.counts.resize(static_cast<std::size_t>(bundle.priors.m1.n_classes) * bundle.priors.m1.n_classes);
    for (int a = 0; a < bundle.priors.m1.n_classes; ++a) {
        r.expect("row");
        for (int b = 0; b < bundle.priors.m1.n_classes; ++b) bundle.priors.m1.count(a, b) = r.integer();
    }
    bundle.priors.m1.recompute_probs();

    r.enter("[m2]");
    r.expect("blocks");
    bundle.priors.m2.n_blocks = static_cast<int>(r.integer());
    r.expect("classes");
    bundle.priors.m2.n_classes = static_cast<int>(r.integer());
    bundle.priors.m2.counts.resize(static_cast<std::size_t>(bundle.priors.m2.n_blocks) * bundle.priors.m2.n_classes *
                                   bundle.priors.m2.n_blocks * bundle.priors.m2.n_classes);
    for (int p = 0; p < bundle.priors.m2.n_blocks; ++p) {
        for (int a = 0; a < bundle.priors.m2.n_classes; ++a) {
            r.expect("row");
            if (static_cast<int>(r.integer()) != p || static_cast<int>(r.integer()) != a)
                throw ModelError("bundle section [m2]: row header out of order");
            for (int q = 0; q < bundle.priors.m2.n_blocks; ++q)
                for (int c = 0; c < bundle.priors.m2.n_classes; ++c) bundle.priors.m2.count(p, a, q, c) = r.integer();
        }
    }
    bundle.priors.m2.recompute_probs();

    r.enter("[mlp]");
    r.expect("inputs");
    bundle.mlp.n_inputs = static_cast<int>(r.integer());
    r.expect("hidden");
    bundle.mlp.n_hidden = static_cast<int>(r.integer());
    r.expect("classes");
    bundle.mlp.n_classes = static_cast<int>(r.integer());
    bundle.mlp.w1 = Matrix(static_cast<std::size_t>(bundle.mlp.n_hidden), static_cast<std::size_t>(bundle.mlp.n_inputs));
    bundle.mlp.b1.resize(static_cast<std::size_t>(bundle.mlp.n_hidden));
    bundle.mlp.w2 = Matrix(static_cast<std::size_t>(bundle.mlp.n_classes), static_cast<std::size_t>(bundle.mlp.n_hidden));
    bundle.mlp.b2.resize(static_cast<std::size_t>(bundle.mlp.n_classes));
    for (std::size_t h = 0; h < bundle.mlp.w1.rows; ++h) {
        r.expect("w1");
        for (std::size_t j = 0; j < bundle.mlp.w1.cols; ++j) bundle.mlp.w1.at(h, j) = r.real();
    }
    r.expect("b1");
    for (auto& v : bundle.mlp.b1) v = r.real();
    for (std::size_t c = 0; c < bundle.mlp.w2.rows; ++c) {
        r.expect("w2");
        for (std::size_t j = 0; j < bundle.mlp.w2.cols; ++j) bundle.mlp.w2.at(c, j) = r.real();
    }
    r.expect("b2");
    for (auto& v : bundle.mlp.b2) v = r.real();

    r.enter("[end]");
    bundle.validate();
    return bundle;
}

} // namespace sceneparse
