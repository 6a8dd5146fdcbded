#pragma once

// JSON group specs, points and covectors. Needs nlohmann/json (vendor/json.hpp).

#include "carnot/geodesics.hpp"
#include "carnot/group.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace carnot::io {

using json = nlohmann::json;

inline Vec vec_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + ": expected an array of numbers");
    Vec v(static_cast<int>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(what + ": entry " + std::to_string(i) + " is not a number");
        v(static_cast<int>(i)) = j[i].get<double>();
    }
    return v;
}

inline json vec_to_json(const Vec& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

// Nested rows [[...], ...]
inline Mat mat_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ValidationError(what + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ValidationError(what + ": rows must be non-empty arrays");
    Mat M(static_cast<int>(j.size()), static_cast<int>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(what + ": ragged rows");
        M.row(static_cast<int>(r)) = vec_from_json(j[r], what).transpose();
    }
    return M;
}

inline json mat_to_json(const Mat& M) {
    json j = json::array();
    for (int r = 0; r < M.rows(); ++r) j.push_back(vec_to_json(M.row(r).transpose()));
    return j;
}

inline StepTwoGroup group_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("group spec: expected a JSON object");
    const std::string fam = j.contains("family") ? j.at("family").get<std::string>() : std::string("generic");
    if (fam == "generic") {
        if (!j.contains("U")) throw ValidationError("group spec: generic groups need \"U\"");
        const json& U = j.at("U");
        if (!U.is_array() || U.empty()) throw ValidationError("group spec: \"U\" must be a non-empty list of matrices");
        int q = j.contains("q") ? j.at("q").get<int>() : -1;
        if (j.contains("m") && j.at("m").get<int>() != static_cast<int>(U.size()))
            throw ValidationError("group spec: \"m\" does not match the number of matrices in \"U\"");
        std::vector<Mat> mats;
        for (std::size_t k = 0; k < U.size(); ++k) {
            const std::string what = "group spec: U[" + std::to_string(k) + "]";
            if (U[k].is_array() && !U[k].empty() && U[k][0].is_array()) {
                mats.push_back(mat_from_json(U[k], what));
            } else {
                // flat row-major q*q list
                const Vec flat = vec_from_json(U[k], what);
                if (q < 0) q = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
                if (static_cast<long>(q) * q != flat.size())
                    throw ValidationError(what + ": length is not q*q");
                Mat M(q, q);
                for (int r = 0; r < q; ++r)
                    for (int c = 0; c < q; ++c) M(r, c) = flat(r * q + c);
                mats.push_back(M);
            }
            if (q >= 0 && mats.back().rows() != q) throw ValidationError(what + ": size does not match \"q\"");
        }
        return make_generic(std::move(mats));
    }
    if (fam == "heisenberg") return make_heisenberg();
    if (fam == "ktype") return make_ktype(mat_from_json(j.at("B"), "group spec: B"));
    if (fam == "cr") return make_cr(mat_from_json(j.at("A"), "group spec: A"));
    if (fam == "n32") return make_n32();
    if (fam == "p4") return make_p4(j.at("N").get<int>());
    if (fam == "product" || fam == "sa") {
        const json& parts = j.at("parts");
        if (!parts.is_array() || parts.size() != 2) throw ValidationError("group spec: \"parts\" must hold two specs");
        const StepTwoGroup a = group_from_json(parts[0]), b = group_from_json(parts[1]);
        return fam == "product" ? make_product(a, b) : make_sa(a, b);
    }
    throw ValidationError("group spec: unknown family \"" + fam + "\"");
}

inline json group_to_json(const StepTwoGroup& G) {
    json j;
    switch (G.family) {
        case Family::Heisenberg: j["family"] = "heisenberg"; break;
        case Family::Ktype:
            j["family"] = "ktype";
            j["B"] = mat_to_json(G.data);
            break;
        case Family::CR:
            j["family"] = "cr";
            j["A"] = mat_to_json(G.data);
            break;
        case Family::N32: j["family"] = "n32"; break;
        case Family::MetivierNonGM:
            j["family"] = "p4";
            j["N"] = G.p4N;
            break;
        case Family::DirectProduct:
        case Family::SACompose:
            j["family"] = G.family == Family::DirectProduct ? "product" : "sa";
            j["parts"] = json::array({group_to_json(*G.parts[0]), group_to_json(*G.parts[1])});
            break;
        case Family::Generic: {
            j["family"] = "generic";
            j["q"] = G.q();
            j["m"] = G.m();
            json U = json::array();
            for (int k = 0; k < G.m(); ++k) {
                json flat = json::array();
                for (int r = 0; r < G.q(); ++r)
                    for (int c = 0; c < G.q(); ++c) flat.push_back(G.utuple[k](r, c));
                U.push_back(flat);
            }
            j["U"] = U;
            break;
        }
    }
    return j;
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": invalid JSON (" + e.what() + ")");
    }
}

inline StepTwoGroup load_group(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("group spec: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return group_from_json(parse_json_text(ss.str(), "group spec"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("group spec: ") + e.what());
    }
}

// [[x...], [t...]]
inline GroupElement point_from_json(const json& j, const StepTwoGroup& G) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("point: expected [[x...], [t...]]");
    GroupElement g{vec_from_json(j[0], "point x"), vec_from_json(j[1], "point t")};
    check_point(G, g);
    return g;
}

inline json point_to_json(const GroupElement& g) { return json::array({vec_to_json(g.x), vec_to_json(g.t)}); }

// [[zeta...], [theta...]]: the geodesic is exp(s (zeta, 2 theta)).
inline Covector covector_from_json(const json& j, const StepTwoGroup& G) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("covector: expected [[zeta...], [theta...]]");
    Covector c{vec_from_json(j[0], "covector zeta"), vec_from_json(j[1], "covector theta")};
    check_covector(G, c);
    return c;
}

inline json covector_to_json(const Covector& c) { return json::array({vec_to_json(c.zeta), vec_to_json(c.theta)}); }

}  // namespace carnot::io
