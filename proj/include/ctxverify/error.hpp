#pragma once

#include <stdexcept>
#include <string>

namespace ctxverify {

// Base for every error raised by the library. kind() is the stable name the
// CLI prints on standard error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define CTXVERIFY_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& msg) : Error(msg) {}          \
        const char* kind() const noexcept override { return #Name; }   \
    }

CTXVERIFY_DEFINE_ERROR(FormatError);
CTXVERIFY_DEFINE_ERROR(UnknownClassError);
CTXVERIFY_DEFINE_ERROR(DegeneratePairError);
CTXVERIFY_DEFINE_ERROR(ConsistencyError);
CTXVERIFY_DEFINE_ERROR(SchemaError);
CTXVERIFY_DEFINE_ERROR(EmptyCorpusError);
CTXVERIFY_DEFINE_ERROR(EmptyDistributionError);
CTXVERIFY_DEFINE_ERROR(DuplicateError);
CTXVERIFY_DEFINE_ERROR(DegenerateTrainingError);
CTXVERIFY_DEFINE_ERROR(DimensionError);
CTXVERIFY_DEFINE_ERROR(NotEnoughObjectsError);
CTXVERIFY_DEFINE_ERROR(PlacementError);
CTXVERIFY_DEFINE_ERROR(VersionError);

#undef CTXVERIFY_DEFINE_ERROR

}  // namespace ctxverify
