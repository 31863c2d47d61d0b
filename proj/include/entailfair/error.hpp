#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace entailfair {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Input file could not be parsed; the message names the offending record.
class ParseError : public Error {
public:
    using Error::Error;
};

// A scorer backend answered, but the answer breaks the wire contract
// (simplex violation, missing or duplicated ids, wrong payload kind).
class ContractError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    TransportError(std::string request_id, const std::string& what, bool retryable = true)
        : Error("transport error for request " + request_id + ": " + what),
          request_id_(std::move(request_id)),
          retryable_(retryable) {}

    const std::string& request_id() const noexcept { return request_id_; }
    bool retryable() const noexcept { return retryable_; }

private:
    std::string request_id_;
    bool retryable_;
};

class MissingScoresError : public Error {
public:
    explicit MissingScoresError(std::vector<std::string> ids)
        : Error(describe(ids)), ids_(std::move(ids)) {}

    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    static std::string describe(const std::vector<std::string>& ids) {
        std::string msg = "missing scores for " + std::to_string(ids.size()) + " id(s):";
        const std::size_t shown = ids.size() < 20 ? ids.size() : 20;
        for (std::size_t i = 0; i < shown; ++i) msg += " " + ids[i];
        if (shown < ids.size()) msg += " ...";
        return msg;
    }

    std::vector<std::string> ids_;
};

}  // namespace entailfair
