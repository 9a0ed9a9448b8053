#include "serendip/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "serendip/numeric.hpp"

namespace serendip {

namespace {

using nlohmann::json;

[[noreturn]] void row_error(const std::string& file, std::size_t line,
                            const std::string& what) {
    throw DatasetError(file + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    for (const char ch : line) {
        if (ch == delim) {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

// A parsed delimited file: header row + indexed access by column name.
class Table {
public:
    Table(const std::filesystem::path& path, char delim) : name_(path.string()) {
        std::ifstream in(path);
        if (!in) throw DatasetError("missing file: " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_no == 1) {
                header_ = split(line, delim);
                for (std::size_t i = 0; i < header_.size(); ++i)
                    index_[header_[i]] = i;
                continue;
            }
            if (line.empty()) continue;
            auto cells = split(line, delim);
            if (cells.size() != header_.size())
                row_error(name_, line_no,
                          "expected " + std::to_string(header_.size()) +
                              " columns, got " + std::to_string(cells.size()));
            rows_.emplace_back(line_no, std::move(cells));
        }
    }

    std::size_t column(const std::string& col) const {
        const auto it = index_.find(col);
        if (it == index_.end())
            throw DatasetError(name_ + ": column '" + col + "' not found");
        return it->second;
    }

    const std::string& name() const { return name_; }

    struct Row {
        std::size_t line;
        std::vector<std::string> cells;
    };
    const std::vector<Row>& rows() const { return rows_; }

private:
    std::string name_;
    std::vector<std::string> header_;
    std::map<std::string, std::size_t> index_;
    std::vector<Row> rows_;
};

// Column accessor bound to one table; resolves the header once.
class Field {
public:
    Field() = default;
    Field(const Table& t, const std::string& col) : col_(t.column(col)), set_(true) {}

    bool present() const { return set_; }

    // Empty cell means "absent" for optional fields.
    std::optional<std::string> get(const Table::Row& row) const {
        if (!set_) return std::nullopt;
        const std::string& cell = row.cells[col_];
        if (cell.empty()) return std::nullopt;
        return cell;
    }

    std::string require(const Table& t, const Table::Row& row,
                        const std::string& field) const {
        auto v = get(row);
        if (!v) row_error(t.name(), row.line, "missing value for '" + field + "'");
        return *v;
    }

private:
    std::size_t col_ = 0;
    bool set_ = false;
};

Field bind(const Table& t, const TableSchema& schema, const std::string& field) {
    const auto it = schema.columns.find(field);
    if (it == schema.columns.end()) return {};
    return {t, it->second};
}

double parse_real(const Table& t, const Table::Row& row, const std::string& field,
                  const std::string& text) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        row_error(t.name(), row.line, "bad number for '" + field + "': " + text);
    }
}

std::int64_t parse_int64(const Table& t, const Table::Row& row,
                         const std::string& field, const std::string& text) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        row_error(t.name(), row.line, "bad integer for '" + field + "': " + text);
    }
}

TableSchema parse_table_schema(const json& j, const std::string& table) {
    TableSchema s;
    if (!j.contains("file"))
        throw DatasetError("schema manifest: '" + table + "' needs a 'file'");
    s.file = j.at("file").get<std::string>();
    if (j.contains("columns"))
        for (const auto& [field, col] : j.at("columns").items())
            s.columns[field] = col.get<std::string>();
    if (j.contains("big_five_columns"))
        s.big_five_columns = j.at("big_five_columns").get<std::vector<std::string>>();
    if (j.contains("ground_truth_variables"))
        s.ground_truth_variables =
            j.at("ground_truth_variables").get<std::vector<std::string>>();
    return s;
}

}  // namespace

std::string to_string(Domain d) {
    return d == Domain::ecommerce ? "ecommerce" : "movie";
}

std::string to_string(Gender g) {
    switch (g) {
        case Gender::female: return "female";
        case Gender::male: return "male";
        case Gender::other: return "other";
        case Gender::undisclosed: return "undisclosed";
    }
    return "undisclosed";
}

std::string to_string(InteractionKind k) {
    switch (k) {
        case InteractionKind::click: return "click";
        case InteractionKind::purchase: return "purchase";
        case InteractionKind::rating: return "rating";
        case InteractionKind::unspecified: return "unspecified";
    }
    return "unspecified";
}

Domain domain_from_string(const std::string& s) {
    if (s == "ecommerce") return Domain::ecommerce;
    if (s == "movie") return Domain::movie;
    throw DatasetError("unknown domain: " + s);
}

Gender gender_from_string(const std::string& s) {
    if (s == "female") return Gender::female;
    if (s == "male") return Gender::male;
    if (s == "other") return Gender::other;
    if (s == "undisclosed") return Gender::undisclosed;
    throw DatasetError("unknown gender: " + s);
}

InteractionKind interaction_kind_from_string(const std::string& s) {
    if (s == "click") return InteractionKind::click;
    if (s == "purchase") return InteractionKind::purchase;
    if (s == "rating") return InteractionKind::rating;
    if (s == "unspecified") return InteractionKind::unspecified;
    throw DatasetError("unknown interaction kind: " + s);
}

const UserRecord& Dataset::user(const std::string& id) const {
    const auto it = users.find(id);
    if (it == users.end()) throw DatasetError("unknown user: " + id);
    return it->second;
}

const ItemRecord& Dataset::item(const std::string& id) const {
    const auto it = items.find(id);
    if (it == items.end()) throw DatasetError("unknown item: " + id);
    return it->second;
}

DatasetSchema load_schema(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DatasetError("missing file: " + manifest_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DatasetError("schema manifest " + manifest_path.string() + ": " +
                           e.what());
    }

    DatasetSchema schema;
    schema.domain = domain_from_string(j.at("domain").get<std::string>());
    if (j.contains("delimiter")) {
        const auto d = j.at("delimiter").get<std::string>();
        if (d.size() != 1)
            throw DatasetError("schema manifest: delimiter must be one character");
        schema.delimiter = d[0];
    }
    if (j.contains("list_separator")) {
        const auto d = j.at("list_separator").get<std::string>();
        if (d.size() != 1)
            throw DatasetError("schema manifest: list_separator must be one character");
        schema.list_separator = d[0];
    }
    schema.users = parse_table_schema(j.at("users"), "users");
    schema.items = parse_table_schema(j.at("items"), "items");
    schema.interactions = parse_table_schema(j.at("interactions"), "interactions");
    schema.cases = parse_table_schema(j.at("cases"), "cases");
    return schema;
}

Dataset load_dataset(const std::filesystem::path& base_dir,
                     const DatasetSchema& schema) {
    Dataset ds;
    ds.domain = schema.domain;

    // Users.
    {
        const Table t(base_dir / schema.users.file, schema.delimiter);
        const Field id = bind(t, schema.users, "user_id");
        if (!id.present())
            throw DatasetError(t.name() + ": schema must map 'user_id'");
        const Field age = bind(t, schema.users, "age");
        const Field gender = bind(t, schema.users, "gender");
        const Field curiosity = bind(t, schema.users, "curiosity");
        std::vector<Field> big5;
        if (!schema.users.big_five_columns.empty()) {
            if (schema.users.big_five_columns.size() != 5)
                throw DatasetError(t.name() + ": big_five_columns must list 5 columns");
            for (const auto& col : schema.users.big_five_columns)
                big5.emplace_back(t, col);
        }

        for (const auto& row : t.rows()) {
            UserRecord u;
            u.user_id = id.require(t, row, "user_id");
            if (auto v = age.get(row))
                u.age = static_cast<int>(parse_int64(t, row, "age", *v));
            if (auto v = gender.get(row)) {
                try {
                    u.gender = gender_from_string(*v);
                } catch (const DatasetError&) {
                    row_error(t.name(), row.line, "bad gender: " + *v);
                }
            }
            if (auto v = curiosity.get(row))
                u.curiosity = parse_real(t, row, "curiosity", *v);
            if (!big5.empty()) {
                std::vector<double> vals;
                for (const auto& f : big5) {
                    auto v = f.get(row);
                    if (!v) break;
                    vals.push_back(parse_real(t, row, "big_five", *v));
                }
                if (vals.size() == 5)
                    u.big_five = BigFive{vals[0], vals[1], vals[2], vals[3], vals[4]};
                // Partially filled tuples count as absent.
            }
            const std::string key = u.user_id;
            if (!ds.users.emplace(key, std::move(u)).second)
                row_error(t.name(), row.line, "duplicate user id: " + key);
        }
    }

    // Items.
    {
        const Table t(base_dir / schema.items.file, schema.delimiter);
        const Field id = bind(t, schema.items, "item_id");
        if (!id.present())
            throw DatasetError(t.name() + ": schema must map 'item_id'");
        const Field title = bind(t, schema.items, "title");
        const Field genres = bind(t, schema.items, "genres");
        const Field description = bind(t, schema.items, "description");
        const Field popularity_raw = bind(t, schema.items, "popularity_raw");

        for (const auto& row : t.rows()) {
            ItemRecord item;
            item.item_id = id.require(t, row, "item_id");
            if (auto v = title.get(row)) item.title = *v;
            if (auto v = genres.get(row)) {
                for (auto& g : split(*v, schema.list_separator))
                    if (!g.empty()) item.genres.push_back(std::move(g));
            }
            if (auto v = description.get(row)) item.description = *v;
            if (auto v = popularity_raw.get(row))
                item.popularity_raw = parse_real(t, row, "popularity_raw", *v);
            const std::string key = item.item_id;
            if (!ds.items.emplace(key, std::move(item)).second)
                row_error(t.name(), row.line, "duplicate item id: " + key);
        }
    }

    // Interactions, grouped into user histories.
    {
        const Table t(base_dir / schema.interactions.file, schema.delimiter);
        const Field user = bind(t, schema.interactions, "user_id");
        const Field item = bind(t, schema.interactions, "item_id");
        const Field ts = bind(t, schema.interactions, "timestamp");
        if (!user.present() || !item.present() || !ts.present())
            throw DatasetError(t.name() +
                               ": schema must map user_id, item_id and timestamp");
        const Field kind = bind(t, schema.interactions, "kind");
        const Field rating = bind(t, schema.interactions, "rating_value");

        for (const auto& row : t.rows()) {
            const std::string uid = user.require(t, row, "user_id");
            Interaction act;
            act.item_id = item.require(t, row, "item_id");
            act.timestamp =
                parse_int64(t, row, "timestamp", ts.require(t, row, "timestamp"));
            if (auto v = kind.get(row)) {
                try {
                    act.kind = interaction_kind_from_string(*v);
                } catch (const DatasetError&) {
                    row_error(t.name(), row.line, "bad interaction kind: " + *v);
                }
            }
            if (auto v = rating.get(row)) {
                const double r = parse_real(t, row, "rating_value", *v);
                if (r < 1.0 || r > 5.0)
                    row_error(t.name(), row.line,
                              "rating_value out of [1,5]: " + *v);
                act.rating_value = r;
            }
            if ((act.kind == InteractionKind::rating) != act.rating_value.has_value())
                row_error(t.name(), row.line,
                          "rating_value must be present exactly when kind is 'rating'");

            const auto uit = ds.users.find(uid);
            if (uit == ds.users.end())
                row_error(t.name(), row.line, "dangling reference: user " + uid);
            if (!ds.items.contains(act.item_id))
                row_error(t.name(), row.line,
                          "dangling reference: item " + act.item_id);
            uit->second.history.push_back(std::move(act));
        }

        for (auto& [uid, u] : ds.users)
            std::stable_sort(u.history.begin(), u.history.end(),
                             [](const Interaction& a, const Interaction& b) {
                                 return a.timestamp < b.timestamp;
                             });
    }

    // Evaluation cases.
    {
        const Table t(base_dir / schema.cases.file, schema.delimiter);
        const Field user = bind(t, schema.cases, "user_id");
        const Field item = bind(t, schema.cases, "target_item_id");
        if (!user.present() || !item.present())
            throw DatasetError(t.name() +
                               ": schema must map user_id and target_item_id");
        const Field truth = bind(t, schema.cases, "ground_truth");
        const Field cutoff = bind(t, schema.cases, "cutoff_timestamp");
        std::vector<Field> truth_vars;
        if (!schema.cases.ground_truth_variables.empty()) {
            if (schema.cases.ground_truth_variables.size() != 3)
                throw DatasetError(t.name() +
                                   ": ground_truth_variables must list 3 columns");
            for (const auto& col : schema.cases.ground_truth_variables)
                truth_vars.emplace_back(t, col);
        }
        if (!truth.present() && truth_vars.empty())
            throw DatasetError(
                t.name() +
                ": schema must map 'ground_truth' or list ground_truth_variables");

        for (const auto& row : t.rows()) {
            EvaluationCase c;
            c.user_id = user.require(t, row, "user_id");
            c.target_item_id = item.require(t, row, "target_item_id");

            if (truth.present()) {
                c.ground_truth = static_cast<int>(parse_int64(
                    t, row, "ground_truth", truth.require(t, row, "ground_truth")));
            } else {
                std::map<std::string, int> responses;
                for (std::size_t i = 0; i < truth_vars.size(); ++i) {
                    const auto& name = schema.cases.ground_truth_variables[i];
                    const auto v = truth_vars[i].get(row);
                    if (!v)
                        row_error(t.name(), row.line,
                                  "missing value for '" + name + "'");
                    responses[name] =
                        static_cast<int>(parse_int64(t, row, name, *v));
                }
                try {
                    c.ground_truth = derive_movie_ground_truth(
                        responses, schema.cases.ground_truth_variables);
                } catch (const DatasetError& e) {
                    row_error(t.name(), row.line, e.what());
                }
            }
            if (c.ground_truth < 1 || c.ground_truth > 5)
                row_error(t.name(), row.line,
                          "ground_truth out of {1..5}: " +
                              std::to_string(c.ground_truth));

            const auto uit = ds.users.find(c.user_id);
            if (uit == ds.users.end())
                row_error(t.name(), row.line, "dangling reference: user " + c.user_id);
            if (!ds.items.contains(c.target_item_id))
                row_error(t.name(), row.line,
                          "dangling reference: item " + c.target_item_id);

            if (auto v = cutoff.get(row)) {
                c.cutoff_timestamp = parse_int64(t, row, "cutoff_timestamp", *v);
            } else {
                // No recorded survey exposure time: hide nothing except what
                // follows the user's last interaction.
                const auto& hist = uit->second.history;
                c.cutoff_timestamp = hist.empty() ? 0 : hist.back().timestamp + 1;
            }

            c.case_index = static_cast<int>(ds.cases.size());
            ds.cases.push_back(std::move(c));
        }
    }

    if (ds.cases.empty()) throw DatasetError("no evaluation cases");
    return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    const DatasetSchema schema = load_schema(manifest_path);
    return load_dataset(manifest_path.parent_path(), schema);
}

int derive_movie_ground_truth(const std::map<std::string, int>& responses,
                              const std::vector<std::string>& variable_names) {
    if (variable_names.size() != 3)
        throw DatasetError("expected exactly 3 ground-truth variables");
    double sum = 0;
    for (const auto& name : variable_names) {
        const auto it = responses.find(name);
        if (it == responses.end())
            throw DatasetError("missing variable: " + name);
        if (it->second < 1 || it->second > 5)
            throw DatasetError("variable '" + name + "' out of {1..5}: " +
                               std::to_string(it->second));
        sum += it->second;
    }
    return round_half_up_int(sum / 3.0);
}

std::vector<Interaction> visible_history(
    const Dataset& dataset, const EvaluationCase& c, std::size_t k,
    const std::optional<std::set<InteractionKind>>& kinds) {
    if (k < 1) throw std::invalid_argument("visible_history: k must be >= 1");
    const UserRecord& u = dataset.user(c.user_id);

    std::vector<Interaction> eligible;
    for (const Interaction& act : u.history) {
        if (act.timestamp >= c.cutoff_timestamp) continue;
        if (kinds && !kinds->contains(act.kind)) continue;
        eligible.push_back(act);
    }
    if (eligible.size() > k)
        eligible.erase(eligible.begin(),
                       eligible.begin() + static_cast<std::ptrdiff_t>(eligible.size() - k));
    return eligible;
}

}  // namespace serendip
