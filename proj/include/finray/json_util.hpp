#pragma once

#include "finray/error.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>

namespace finray {

using Json = nlohmann::json;

// Reads optional keys from a JSON object and rejects any key it was not asked about.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string context) : j_(j), ctx_(std::move(context))
    {
        if (!j_.is_object())
            throw Error(ErrorKind::Config, ctx_ + ": expected a JSON object");
    }

    template <class T>
    ObjectReader& get(const std::string& key, T& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return *this;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Config, ctx_ + "." + key + ": " + e.what());
        }
        return *this;
    }

    template <class T>
    ObjectReader& get(const std::string& key, std::optional<T>& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            return *this;
        if (it->is_null()) {
            out.reset();
            return *this;
        }
        T v{};
        get(key, v);
        out = v;
        return *this;
    }

    // Hands a nested object to `fn` if present.
    template <class Fn>
    ObjectReader& nested(const std::string& key, Fn&& fn)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it != j_.end())
            fn(*it, ctx_ + "." + key);
        return *this;
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw Error(ErrorKind::Config, ctx_ + ": unknown key '" + it.key() + "'");
    }

private:
    const Json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

} // namespace finray
