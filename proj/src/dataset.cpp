#include "calibfair/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "calibfair/error.hpp"
#include "calibfair/rng.hpp"

namespace calibfair {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Hamilton (largest remainder) apportionment: each part ends up within
// one of its exact proportional share. Ties go to the earlier part.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
    std::vector<std::size_t> counts(fractions.size());
    std::vector<double> remainders(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        double exact = fractions[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t i = 0; assigned < n; ++i) {
        ++counts[order[i % order.size()]];
        ++assigned;
    }
    return counts;
}

} // namespace

const AttributeColumn* Dataset::find_attribute(const std::string& name) const {
    for (const auto& attr : attributes) {
        if (attr.name == name) return &attr;
    }
    return nullptr;
}

void Dataset::validate() const {
    const std::size_t n = labels.size();
    if (n == 0) throw ValidationError("dataset is empty");
    if (features.rows != n) {
        throw ValidationError("feature row count " + std::to_string(features.rows) +
                              " does not match label count " + std::to_string(n));
    }
    if (num_classes < 2) {
        throw ValidationError("num_classes must be at least 2, got " +
                              std::to_string(num_classes));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw ValidationError("label out of range at row " + std::to_string(i));
        }
    }
    for (double v : features.data) {
        if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    }
    for (const auto& attr : attributes) {
        if (attr.groups.size() != n) {
            throw ValidationError("attribute '" + attr.name + "' has " +
                                  std::to_string(attr.groups.size()) +
                                  " values, expected " + std::to_string(n));
        }
        if (attr.num_groups < 2) {
            throw ValidationError("attribute '" + attr.name +
                                  "' must have at least 2 groups");
        }
        std::set<int> present;
        for (std::size_t i = 0; i < n; ++i) {
            int g = attr.groups[i];
            if (g < 0 || g >= attr.num_groups) {
                throw ValidationError("attribute '" + attr.name +
                                      "' group out of range at row " + std::to_string(i));
            }
            present.insert(g);
        }
        if (present.size() < 2) {
            throw ValidationError("attribute '" + attr.name +
                                  "' has fewer than 2 distinct groups present");
        }
    }
}

void SyntheticSpec::validate() const {
    if (n_samples < 1) throw ValidationError("n_samples must be positive");
    if (n_features < 1) throw ValidationError("n_features must be positive");
    if (n_classes < 2) throw ValidationError("n_classes must be at least 2");
    if (n_samples < n_classes) {
        throw ValidationError("n_samples must be at least n_classes");
    }
    if (!(class_separation > 0.0)) {
        throw ValidationError("class_separation must be positive");
    }
    if (attributes.empty()) throw ValidationError("attributes must be nonempty");
    for (const auto& attr : attributes) {
        if (attr.name.empty()) throw ValidationError("attribute name is empty");
        if (attr.fractions.size() < 2) {
            throw ValidationError("attribute '" + attr.name +
                                  "': fractions must define at least 2 groups");
        }
        double sum = 0.0;
        for (double f : attr.fractions) {
            if (!(f > 0.0)) {
                throw ValidationError("attribute '" + attr.name +
                                      "': fractions must be positive");
            }
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ValidationError("attribute '" + attr.name +
                                  "': fractions sum to " + fmt_double(sum) +
                                  ", expected 1");
        }
        if (attr.noise_rates.size() != attr.fractions.size()) {
            throw ValidationError("attribute '" + attr.name +
                                  "': noise_rates length mismatch");
        }
        for (double r : attr.noise_rates) {
            if (!(r >= 0.0 && r < 0.5)) {
                throw ValidationError("attribute '" + attr.name +
                                      "': noise_rates must lie in [0, 0.5)");
            }
        }
        if (attr.feature_shifts.size() != attr.fractions.size()) {
            throw ValidationError("attribute '" + attr.name +
                                  "': feature_shifts length mismatch");
        }
    }
}

SyntheticDebug generate_synthetic_with_latent(const SyntheticSpec& spec,
                                              std::uint64_t seed) {
    spec.validate();
    const int n = spec.n_samples;
    const int d = spec.n_features;
    const int c = spec.n_classes;

    SyntheticDebug out;
    Dataset& ds = out.dataset;
    ds.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    ds.labels.resize(n);
    ds.num_classes = c;
    out.latent_labels.resize(n);
    for (const auto& attr : spec.attributes) {
        AttributeColumn col;
        col.name = attr.name;
        col.num_groups = static_cast<int>(attr.fractions.size());
        col.groups.resize(n);
        ds.attributes.push_back(std::move(col));
    }

    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        // Group membership for every attribute.
        double shift = 0.0;
        for (std::size_t a = 0; a < spec.attributes.size(); ++a) {
            const auto& attr = spec.attributes[a];
            double u = rng.uniform();
            int g = static_cast<int>(attr.fractions.size()) - 1;
            double cum = 0.0;
            for (std::size_t k = 0; k < attr.fractions.size(); ++k) {
                cum += attr.fractions[k];
                if (u < cum) { g = static_cast<int>(k); break; }
            }
            ds.attributes[a].groups[i] = g;
            shift += attr.feature_shifts[g];
        }

        // Latent class, uniform. Class k's mean sits on coordinate axis
        // k % d at magnitude class_separation; classes beyond d reuse
        // axes at doubled magnitude.
        int latent = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(c)));
        out.latent_labels[i] = latent;
        double scale = spec.class_separation * (1.0 + static_cast<double>(latent / d));
        int axis = latent % d;
        for (int j = 0; j < d; ++j) {
            double mean = (j == axis ? scale : 0.0) + shift;
            ds.features.at(i, j) = mean + rng.gaussian();
        }

        // Label noise from the first attribute's group only.
        double rate = spec.attributes[0].noise_rates[ds.attributes[0].groups[i]];
        int label = latent;
        if (rng.uniform() < rate) {
            int r = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(c - 1)));
            label = (r >= latent) ? r + 1 : r;
        }
        ds.labels[i] = label;
    }

    ds.validate();
    return out;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    return generate_synthetic_with_latent(spec, seed).dataset;
}

namespace {

struct ColumnPlan {
    std::vector<int> feature_index;   // per column: which fK, or -1
    std::vector<int> attribute_index; // per column: which attribute, or -1
    int label_column = -1;
    int num_features = 0;
};

ColumnPlan plan_columns(const std::vector<std::string>& header) {
    ColumnPlan plan;
    plan.feature_index.assign(header.size(), -1);
    plan.attribute_index.assign(header.size(), -1);
    std::vector<bool> feature_seen;
    int attrs = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == "label") {
            if (plan.label_column >= 0) throw ParseError("duplicate 'label' column");
            plan.label_column = static_cast<int>(c);
        } else if (name.rfind("attr_", 0) == 0) {
            if (name.size() == 5) throw ParseError("attribute column with empty name");
            plan.attribute_index[c] = attrs++;
        } else if (!name.empty() && name[0] == 'f') {
            int idx = -1;
            auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
            if (ec != std::errc() || p != name.data() + name.size() || idx < 0) {
                throw ParseError("unrecognized column '" + name + "'");
            }
            if (static_cast<std::size_t>(idx) >= feature_seen.size()) {
                feature_seen.resize(idx + 1, false);
            }
            if (feature_seen[idx]) throw ParseError("duplicate column '" + name + "'");
            feature_seen[idx] = true;
            plan.feature_index[c] = idx;
        } else {
            throw ParseError("unrecognized column '" + name + "'");
        }
    }
    if (plan.label_column < 0) throw ParseError("missing 'label' column");
    if (feature_seen.empty()) throw ParseError("no feature columns (f0..) found");
    for (std::size_t i = 0; i < feature_seen.size(); ++i) {
        if (!feature_seen[i]) {
            throw ParseError("feature columns are not contiguous: missing f" +
                             std::to_string(i));
        }
    }
    plan.num_features = static_cast<int>(feature_seen.size());
    return plan;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

double parse_double_cell(const std::string& cell, std::size_t row, const std::string& col) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size()) {
        throw ParseError("row " + std::to_string(row) + ", column '" + col +
                         "': non-numeric value '" + cell + "'");
    }
    return v;
}

int parse_int_cell(const std::string& cell, std::size_t row, const std::string& col) {
    int v = 0;
    auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || p != cell.data() + cell.size()) {
        throw ParseError("row " + std::to_string(row) + ", column '" + col +
                         "': non-numeric value '" + cell + "'");
    }
    if (v < 0) {
        throw ParseError("row " + std::to_string(row) + ", column '" + col +
                         "': negative value out of range");
    }
    return v;
}

} // namespace

Dataset load_csv(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header in '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line);
    ColumnPlan plan = plan_columns(header);

    Dataset ds;
    std::vector<std::vector<double>> feature_rows;
    std::vector<std::vector<int>> attr_values; // per attribute
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (plan.attribute_index[c] >= 0) {
            AttributeColumn col;
            col.name = header[c].substr(5);
            ds.attributes.push_back(std::move(col));
            attr_values.emplace_back();
        }
    }

    std::size_t row = 1; // header is row 0
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) { ++row; continue; }
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        }
        std::vector<double> feats(plan.num_features, 0.0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (plan.feature_index[c] >= 0) {
                feats[plan.feature_index[c]] = parse_double_cell(cells[c], row, header[c]);
            } else if (static_cast<int>(c) == plan.label_column) {
                ds.labels.push_back(parse_int_cell(cells[c], row, header[c]));
            } else {
                attr_values[plan.attribute_index[c]].push_back(
                    parse_int_cell(cells[c], row, header[c]));
            }
        }
        feature_rows.push_back(std::move(feats));
        ++row;
    }
    if (feature_rows.empty()) throw ParseError("'" + path + "' contains no data rows");

    ds.features = Matrix(feature_rows.size(), plan.num_features);
    for (std::size_t i = 0; i < feature_rows.size(); ++i) {
        std::copy(feature_rows[i].begin(), feature_rows[i].end(), ds.features.row(i));
    }
    int max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
    ds.num_classes = max_label + 1;
    for (std::size_t a = 0; a < ds.attributes.size(); ++a) {
        ds.attributes[a].groups = std::move(attr_values[a]);
        int max_group = *std::max_element(ds.attributes[a].groups.begin(),
                                          ds.attributes[a].groups.end());
        ds.attributes[a].num_groups = max_group + 1;
    }

    if (warnings) {
        std::vector<bool> seen(ds.num_classes, false);
        for (int y : ds.labels) seen[y] = true;
        for (int y = 0; y < ds.num_classes; ++y) {
            if (!seen[y]) {
                warnings->push_back("class " + std::to_string(y) +
                                    " is absent from '" + path + "'");
            }
        }
    }

    ds.validate();
    return ds;
}

void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // \n line endings everywhere
    if (!out) throw RuntimeFailure("cannot write '" + path + "'");
    const std::size_t d = dataset.num_features();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
    out << "label";
    for (const auto& attr : dataset.attributes) out << ",attr_" << attr.name;
    out << '\n';
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out << fmt_double(dataset.features.at(i, j)) << ',';
        }
        out << dataset.labels[i];
        for (const auto& attr : dataset.attributes) out << ',' << attr.groups[i];
        out << '\n';
    }
    if (!out) throw RuntimeFailure("failed writing '" + path + "'");
}

Split make_split(const Dataset& dataset,
                 double train_fraction, double val_fraction,
                 double test_fraction, std::uint64_t seed,
                 bool stratify_by_label) {
    const std::size_t n = dataset.size();
    std::vector<double> fractions = {train_fraction, val_fraction, test_fraction};
    for (double f : fractions) {
        if (!(f > 0.0)) throw ValidationError("split fractions must be positive");
    }
    double sum = train_fraction + val_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split fractions must sum to 1");
    }
    if (n < 3) throw ValidationError("need at least 3 samples to split");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    Split split;
    auto take = [&](const std::vector<std::size_t>& pool) {
        std::vector<std::size_t> counts = apportion(pool.size(), fractions);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < counts[0]; ++i) split.train.push_back(pool[pos++]);
        for (std::size_t i = 0; i < counts[1]; ++i) split.val.push_back(pool[pos++]);
        for (std::size_t i = 0; i < counts[2]; ++i) split.test.push_back(pool[pos++]);
    };

    if (stratify_by_label) {
        std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
        for (std::size_t idx : order) by_class[dataset.labels[idx]].push_back(idx);
        for (const auto& pool : by_class) {
            if (!pool.empty()) take(pool);
        }
    } else {
        take(order);
    }

    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw ValidationError("a split part is empty; use a larger dataset "
                              "or different fractions");
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

SyntheticSpec biased_binary_spec(int n_samples) {
    SyntheticSpec spec;
    spec.n_samples = n_samples;
    spec.n_features = 6;
    spec.n_classes = 2;
    spec.class_separation = 2.0;
    AttributeSpec age;
    age.name = "age";
    age.fractions = {0.7, 0.3};
    age.noise_rates = {0.0, 0.3};
    age.feature_shifts = {0.0, 0.0};
    AttributeSpec sex;
    sex.name = "sex";
    sex.fractions = {0.5, 0.5};
    sex.noise_rates = {0.0, 0.0};
    sex.feature_shifts = {0.0, 0.5};
    spec.attributes = {age, sex};
    return spec;
}

SyntheticSpec biased_multiclass_spec(int n_samples) {
    SyntheticSpec spec;
    spec.n_samples = n_samples;
    spec.n_features = 10;
    spec.n_classes = 7;
    spec.class_separation = 2.5;
    AttributeSpec age;
    age.name = "age";
    age.fractions = {0.6, 0.4};
    age.noise_rates = {0.0, 0.25};
    age.feature_shifts = {0.0, 0.0};
    AttributeSpec sex;
    sex.name = "sex";
    sex.fractions = {0.5, 0.5};
    sex.noise_rates = {0.0, 0.0};
    sex.feature_shifts = {0.0, 0.4};
    spec.attributes = {age, sex};
    return spec;
}

} // namespace calibfair
