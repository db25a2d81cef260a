#include "dvdf/core/mdp_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/text_format.hpp"

namespace dvdf {

namespace {

void write_row(std::ostream& out, std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ' ';
        out << format_double(row[i]);
    }
    out << '\n';
}

std::vector<double> read_row(std::istream& in, std::size_t expected, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(std::string("truncated file while reading ") + what);
    std::vector<double> row;
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) row.push_back(parse_double(tok));
    if (row.size() != expected) throw InvalidInput(std::string("wrong number of values in ") + what);
    return row;
}

void expect_magic(std::istream& in, const char* magic) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != magic)
        throw InvalidInput(std::string("missing header '") + magic + "'");
}

} // namespace

void write_mdp(std::ostream& out, const TabularMDP& mdp) {
    out << "tabular-mdp v1\n";
    out << mdp.n_states() << ' ' << mdp.n_actions() << ' ' << format_double(mdp.gamma()) << ' '
        << format_double(mdp.r_max()) << '\n';
    write_row(out, mdp.initial());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) write_row(out, mdp.row(s, a));
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        write_row(out, mdp.rewards().subspan(s * mdp.n_actions(), mdp.n_actions()));
}

TabularMDP read_mdp(std::istream& in) {
    expect_magic(in, "tabular-mdp v1");
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("mdp file: missing shape line");
    const auto fields = split(trim(line), ' ');
    if (fields.size() != 4) throw InvalidInput("mdp file: shape line needs 4 fields");
    const auto n_states = static_cast<std::size_t>(parse_unsigned(fields[0]));
    const auto n_actions = static_cast<std::size_t>(parse_unsigned(fields[1]));
    const double gamma = parse_double(fields[2]);
    const double r_max = parse_double(fields[3]);

    auto initial = read_row(in, n_states, "initial distribution");
    std::vector<double> transitions;
    transitions.reserve(n_states * n_actions * n_states);
    for (std::size_t i = 0; i < n_states * n_actions; ++i) {
        const auto row = read_row(in, n_states, "kernel row");
        transitions.insert(transitions.end(), row.begin(), row.end());
    }
    std::vector<double> rewards;
    rewards.reserve(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
        const auto row = read_row(in, n_actions, "reward row");
        rewards.insert(rewards.end(), row.begin(), row.end());
    }
    return TabularMDP(n_states, n_actions, std::move(transitions), std::move(rewards), std::move(initial),
                      gamma, r_max);
}

void save_mdp(const std::string& path, const TabularMDP& mdp) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    write_mdp(out, mdp);
}

TabularMDP load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot read " + path);
    return read_mdp(in);
}

void write_policy(std::ostream& out, const PolicyTable& pi) {
    out << "policy-table v1\n" << pi.n_states() << ' ' << pi.n_actions() << '\n';
    for (std::size_t s = 0; s < pi.n_states(); ++s) write_row(out, pi.row(s));
}

PolicyTable read_policy(std::istream& in) {
    expect_magic(in, "policy-table v1");
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("policy file: missing shape line");
    const auto fields = split(trim(line), ' ');
    if (fields.size() != 2) throw InvalidInput("policy file: shape line needs 2 fields");
    const auto n_states = static_cast<std::size_t>(parse_unsigned(fields[0]));
    const auto n_actions = static_cast<std::size_t>(parse_unsigned(fields[1]));
    std::vector<double> probs;
    for (std::size_t s = 0; s < n_states; ++s) {
        const auto row = read_row(in, n_actions, "policy row");
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return PolicyTable(n_states, n_actions, std::move(probs));
}

} // namespace dvdf
