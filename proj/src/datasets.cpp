#include "atmp/datasets.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "atmp/errors.hpp"

namespace atmp {

void DatasetSpec::validate() const {
    if (kind == Kind::Csv) {
        if (csv_path.empty()) throw ConfigError("dataset: csv kind needs data.csv_path");
        return;
    }
    if (n < 1) throw ConfigError("dataset: n must be >= 1");
    if (d < 1) throw ConfigError("dataset: d must be >= 1");
    if (kind != Kind::Linreg && classes < 2) throw ConfigError("dataset: classes must be >= 2");
    if (kind == Kind::Moons && d != 2) throw ConfigError("dataset: moons needs d = 2");
    if (noise < 0.0) throw ConfigError("dataset: noise must be >= 0");
    if (kind == Kind::Blobs && !(separation > 0.0))
        throw ConfigError("dataset: separation must be > 0");
    if (!theta_true.empty() && theta_true.size() != static_cast<std::size_t>(d))
        throw ConfigError("dataset: theta_true dimension mismatch");
}

GeneratedData generate_dataset(const DatasetSpec& spec, const Rng& rng) {
    spec.validate();
    GeneratedData out;
    if (spec.kind == DatasetSpec::Kind::Csv) {
        out.data = load_csv_dataset(spec.csv_path, spec.csv_classes);
        return out;
    }

    Rng r = rng.child(stream::kData);
    const std::size_t n = static_cast<std::size_t>(spec.n);
    const std::size_t d = static_cast<std::size_t>(spec.d);
    out.data.examples.reserve(n);

    switch (spec.kind) {
        case DatasetSpec::Kind::Linreg: {
            out.data.num_classes = 0;
            Vec theta = spec.theta_true;
            if (theta.empty()) {
                theta.resize(d);
                for (double& t : theta) t = r.normal();
                double nrm = l2_norm(theta);
                if (nrm > 0.0)
                    for (double& t : theta) t /= nrm;
            }
            out.theta_true = theta;
            for (std::size_t i = 0; i < n; ++i) {
                Example ex;
                ex.x.resize(d);
                for (double& v : ex.x) v = r.normal();
                ex.y = dot(ex.x, theta) + spec.noise * r.normal();
                out.data.examples.push_back(std::move(ex));
            }
            break;
        }
        case DatasetSpec::Kind::Blobs: {
            out.data.num_classes = spec.classes;
            std::vector<Vec> centers(static_cast<std::size_t>(spec.classes));
            if (spec.classes == 2) {
                double c = spec.separation / 2.0 / std::sqrt(static_cast<double>(d));
                centers[0].assign(d, c);
                centers[1].assign(d, -c);
            } else {
                // Centers depend only on (classes, d), not on the sampling
                // stream, so train and holdout draws share one distribution.
                Rng cr = Rng(0x626c6f62ULL).child(static_cast<std::uint64_t>(spec.classes),
                                                  static_cast<std::uint64_t>(d));
                for (auto& ctr : centers) {
                    ctr.resize(d);
                    double nrm = 0.0;
                    while (nrm == 0.0) {
                        for (double& v : ctr) v = cr.normal();
                        nrm = l2_norm(ctr);
                    }
                    for (double& v : ctr) v *= spec.separation / 2.0 / nrm;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                int label = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
                Example ex;
                ex.y = label;
                ex.x.resize(d);
                for (std::size_t j = 0; j < d; ++j)
                    ex.x[j] = centers[static_cast<std::size_t>(label)][j] + spec.noise * r.normal();
                out.data.examples.push_back(std::move(ex));
            }
            break;
        }
        case DatasetSpec::Kind::Moons: {
            out.data.num_classes = 2;
            for (std::size_t i = 0; i < n; ++i) {
                int label = static_cast<int>(i % 2);
                double t = r.uniform01() * 3.14159265358979323846;
                Example ex;
                ex.y = label;
                if (label == 0)
                    ex.x = {std::cos(t), std::sin(t)};
                else
                    ex.x = {1.0 - std::cos(t), 0.5 - std::sin(t)};
                ex.x[0] += spec.noise * r.normal();
                ex.x[1] += spec.noise * r.normal();
                out.data.examples.push_back(std::move(ex));
            }
            break;
        }
        case DatasetSpec::Kind::Csv:
            break;  // handled above
    }
    return out;
}

Dataset load_csv_dataset(const std::string& path, int num_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    Dataset data;
    data.num_classes = num_classes;
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument("trailing");
                fields.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (lineno == 1) continue;  // header row
            throw IoError(path + ":" + std::to_string(lineno) + ": non-numeric row");
        }
        if (fields.size() < 2)
            throw IoError(path + ":" + std::to_string(lineno) + ": need x columns plus y");
        if (dim == 0) dim = fields.size() - 1;
        if (fields.size() - 1 != dim)
            throw IoError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
        Example ex;
        ex.x.assign(fields.begin(), fields.end() - 1);
        ex.y = fields.back();
        if (num_classes > 0) {
            int label = static_cast<int>(ex.y);
            if (static_cast<double>(label) != ex.y || label < 0 || label >= num_classes)
                throw IoError(path + ":" + std::to_string(lineno) + ": label out of range");
        }
        data.examples.push_back(std::move(ex));
    }
    if (data.examples.empty()) throw IoError(path + ": empty dataset");
    return data;
}

}  // namespace atmp
