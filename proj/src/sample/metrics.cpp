#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nps/sample/sampler.hpp"

namespace nps::sample {

namespace {

void check_inputs(const std::vector<double>& cpi, const ClusterModel& m) {
    if (cpi.size() != m.assignment.size())
        throw std::invalid_argument("metrics: CPI series length does not match assignment");
    for (double v : cpi)
        if (v <= 0.0) throw std::invalid_argument("metrics: CPI must be positive");
    for (int a : m.assignment) {
        if (a < 0 || a >= m.k) throw std::invalid_argument("metrics: assignment out of range");
        if (m.representative[a] < 0 ||
            m.representative[a] >= static_cast<int>(cpi.size()))
            throw std::invalid_argument("metrics: representative out of range");
    }
}

std::vector<double> rep_series(const std::vector<double>& cpi, const ClusterModel& m) {
    check_inputs(cpi, m);
    std::vector<double> rep(cpi.size());
    for (size_t i = 0; i < cpi.size(); ++i)
        rep[i] = cpi[m.representative[m.assignment[i]]];
    return rep;
}

void check_series(const std::vector<double>& cpi, const std::vector<double>& rep) {
    if (cpi.empty()) throw std::invalid_argument("metrics: empty CPI series");
    if (cpi.size() != rep.size())
        throw std::invalid_argument("metrics: representative series length mismatch");
    for (double v : cpi)
        if (v <= 0.0) throw std::invalid_argument("metrics: CPI must be positive");
    for (double v : rep)
        if (v <= 0.0) throw std::invalid_argument("metrics: representative CPI must be positive");
}

}  // namespace

double mape_vs(const std::vector<double>& cpi, const std::vector<double>& rep) {
    check_series(cpi, rep);
    double total = 0.0;
    for (size_t i = 0; i < cpi.size(); ++i) total += std::abs(rep[i] - cpi[i]) / cpi[i];
    return total / static_cast<double>(cpi.size());
}

double mean_error_vs(const std::vector<double>& cpi, const std::vector<double>& rep) {
    check_series(cpi, rep);
    double num = 0.0, denom = 0.0;
    for (size_t i = 0; i < cpi.size(); ++i) {
        num += rep[i] - cpi[i];
        denom += cpi[i];
    }
    return std::abs(num) / denom;
}

double mape(const std::vector<double>& cpi, const ClusterModel& m) {
    return mape_vs(cpi, rep_series(cpi, m));
}

double mean_error(const std::vector<double>& cpi, const ClusterModel& m) {
    return mean_error_vs(cpi, rep_series(cpi, m));
}

void write_simpoints(const ClusterModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open simpoints file for writing: " + path);
    out << "cluster,representative,weight\n";
    std::vector<size_t> sizes(m.k, 0);
    for (int a : m.assignment) ++sizes[a];
    for (int c = 0; c < m.k; ++c) {
        double weight = static_cast<double>(sizes[c]) / static_cast<double>(m.assignment.size());
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9f", weight);
        out << c << "," << m.representative[c] << "," << buf << "\n";
    }
    if (!out) throw std::runtime_error("I/O error writing simpoints file: " + path);
}

void write_eval(const std::vector<EvalRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open eval file for writing: " + path);
    out << "method,mape,me,k,maxk,interval_length,seed\n";
    for (const auto& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.12f,%.12f", r.mape, r.me);
        out << r.method << "," << buf << "," << r.k << "," << r.maxk << ","
            << r.interval_length << "," << r.seed << "\n";
    }
    if (!out) throw std::runtime_error("I/O error writing eval file: " + path);
}

std::vector<EvalRow> read_eval(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open eval file: " + path);
    std::vector<EvalRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        EvalRow r;
        std::string field;
        auto next = [&]() {
            if (!std::getline(ss, field, ','))
                throw std::runtime_error("malformed eval row in " + path + ": " + line);
            return field;
        };
        r.method = next();
        r.mape = std::stod(next());
        r.me = std::stod(next());
        r.k = std::stoi(next());
        r.maxk = std::stoi(next());
        r.interval_length = std::stoull(next());
        r.seed = std::stoull(next());
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_cpi(const std::vector<double>& cpi, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open CPI file for writing: " + path);
    out << "interval,cpi\n";
    for (size_t i = 0; i < cpi.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12f", cpi[i]);
        out << i << "," << buf << "\n";
    }
    if (!out) throw std::runtime_error("I/O error writing CPI file: " + path);
}

std::vector<double> read_cpi(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CPI file: " + path);
    std::vector<double> cpi;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed CPI row in " + path + ": " + line);
        cpi.push_back(std::stod(line.substr(comma + 1)));
    }
    return cpi;
}

}  // namespace nps::sample
