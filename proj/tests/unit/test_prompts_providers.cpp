#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "podforge/errors.hpp"
#include "podforge/prompts.hpp"
#include "podforge/providers.hpp"
#include "test_support.hpp"

namespace podforge {
namespace {

using testing::ScriptedProvider;
using testing::TempDir;

TEST(PromptTemplate, RendersPlaceholdersAndLiteralBraces) {
    PromptTemplate t("demo", 1, "Topic: {topic} -> {{\"k\": {n}}}");
    EXPECT_EQ(t.placeholders(), (std::set<std::string>{"topic", "n"}));
    EXPECT_EQ(t.render({{"topic", "sleep"}, {"n", "2"}}), "Topic: sleep -> {\"k\": 2}");
}

TEST(PromptTemplate, MissingValueIsAnError) {
    PromptTemplate t("demo", 1, "{a} {b}");
    EXPECT_THROW(t.render({{"a", "x"}}), PreconditionError);
}

TEST(PromptTemplate, MalformedTemplatesAreRejected) {
    EXPECT_THROW(PromptTemplate("bad", 1, "open {topic"), FormatError);
    EXPECT_THROW(PromptTemplate("bad", 1, "stray } brace"), FormatError);
    EXPECT_THROW(PromptTemplate("bad", 1, "{Not Valid}"), FormatError);
}

TEST(PromptLibrary, BuiltinsCarryTheirRequiredPlaceholders) {
    const auto lib = PromptLibrary::builtin();
    for (const auto& [name, keys] : required_placeholders()) {
        ASSERT_TRUE(lib.contains(name)) << name;
        for (const auto& k : keys) EXPECT_TRUE(lib.get(name).placeholders().contains(k)) << name << ":" << k;
    }
    // The Host/Guest/Writer set jointly exposes every episode placeholder.
    std::set<std::string> all;
    for (const char* n : {"host_profiles", "host_outline", "guest_response", "writer_script"}) {
        const auto& p = lib.get(n).placeholders();
        all.insert(p.begin(), p.end());
    }
    for (const char* k : {"topic", "n_guests", "profiles", "outline", "responses"}) {
        EXPECT_TRUE(all.contains(k)) << k;
    }
}

TEST(PromptLibrary, DirectBaselinePromptKeepsTheDirectorWording) {
    const auto text = PromptLibrary::builtin().get("direct_baseline").render(
        {{"topic", "How can I develop my critical thinking skills?"}, {"n_guests", "2"}});
    EXPECT_NE(text.find("You are a talk show director and script writer. Here is the topic of the "
                        "talk show: How can I develop my critical thinking skills?"),
              std::string::npos);
    EXPECT_NE(text.find("featuring 1 host and 2 guests"), std::string::npos);
}

TEST(PromptLibrary, OverridesReplaceSameOrOlderVersions) {
    TempDir dir;
    {
        std::ofstream(dir.path() / "repair.v2.txt") << "Fix it: {error}";
        std::ofstream(dir.path() / "notes.txt") << "ignored";
    }
    const auto lib = PromptLibrary::with_overrides(dir.path());
    EXPECT_EQ(lib.get("repair").version(), 2);
    EXPECT_EQ(lib.get("repair").render({{"error", "x"}}), "Fix it: x");
    EXPECT_EQ(lib.get("judge").version(), 1);
}

TEST(PromptLibrary, OverrideMissingRequiredPlaceholderIsRejected) {
    TempDir dir;
    std::ofstream(dir.path() / "judge.v3.txt") << "only {dialogue_a}";
    EXPECT_THROW(PromptLibrary::with_overrides(dir.path()), FormatError);
}

TEST(ExtractJson, HandlesFencesProseAndNesting) {
    EXPECT_EQ(extract_json("```json\n{\"a\": 1}\n```")["a"], 1);
    EXPECT_EQ(extract_json("Sure! Here it is: {\"a\": {\"b\": \"}\"}} hope this helps")["a"]["b"], "}");
    EXPECT_EQ(extract_json("[1, 2]").size(), 2u);
    EXPECT_THROW(extract_json("no json here"), SchemaError);
    EXPECT_THROW(extract_json("{\"a\": 1"), SchemaError);
    EXPECT_THROW(extract_json("{\"a\": }"), SchemaError);
}

TEST(ExtractJson, PreservesKeyOrder) {
    const auto j = extract_json(R"({"zeta": 1, "alpha": 2})");
    EXPECT_EQ(j.begin().key(), "zeta");
}

TEST(Retry, TransportErrorsAreRetriedWithExponentialBackoff) {
    ScriptedProvider llm;
    llm.push_timeout();
    llm.push_timeout();
    llm.push("ok");
    std::vector<std::chrono::milliseconds> waits;
    RetryPolicy policy;
    policy.sleeper = [&](std::chrono::milliseconds d) { waits.push_back(d); };
    EXPECT_EQ(complete_with_retry(llm, {}, policy), "ok");
    EXPECT_EQ(llm.requests.size(), 3u);
    EXPECT_EQ(waits, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(1000),
                                                             std::chrono::milliseconds(2000)}));
}

TEST(Retry, GivesUpAfterMaxAttempts) {
    ScriptedProvider llm;
    for (int i = 0; i < 3; ++i) llm.push_timeout();
    llm.push("never reached");
    EXPECT_THROW(complete_with_retry(llm, {}, RetryPolicy::no_wait(3)), TransportError);
    EXPECT_EQ(llm.requests.size(), 3u);
}

TEST(Retry, NonTransportErrorsAreNotRetried) {
    ScriptedProvider llm;  // exhausted -> ProviderError
    EXPECT_THROW(complete_with_retry(llm, {}, RetryPolicy::no_wait(3)), ProviderError);
    EXPECT_EQ(llm.requests.size(), 1u);
}

int parse_value(const nlohmann::ordered_json& j) {
    if (!j.contains("value")) throw SchemaError("missing field \"value\"");
    return j.at("value").get<int>();
}

TEST(StructuredCompletion, OneRepairRoundTripQuotesTheError) {
    ScriptedProvider llm;
    llm.push("not json at all");
    llm.push(R"({"value": 7})");
    CompletionRequest req;
    req.task = "demo";
    req.messages.push_back({"user", "give me a value"});
    EXPECT_EQ(complete_structured<int>(llm, req, RetryPolicy::no_wait(), parse_value), 7);
    ASSERT_EQ(llm.requests.size(), 2u);
    const auto& repair = llm.requests[1].messages;
    ASSERT_EQ(repair.size(), 3u);
    EXPECT_EQ(repair[1].role, "assistant");
    EXPECT_EQ(repair[1].content, "not json at all");
    EXPECT_NE(repair[2].content.find("no JSON"), std::string::npos);
}

TEST(StructuredCompletion, SecondFailureSurfacesSchemaError) {
    ScriptedProvider llm;
    llm.push(R"({"other": 1})");
    llm.push(R"({"other": 2})");
    llm.push(R"({"value": 3})");
    EXPECT_THROW(complete_structured<int>(llm, {}, RetryPolicy::no_wait(), parse_value), SchemaError);
    EXPECT_EQ(llm.requests.size(), 2u);
}

TEST(StructuredCompletion, TypeErrorsCountAsSchemaErrors) {
    ScriptedProvider llm;
    llm.push(R"({"value": "seven"})");
    llm.push(R"({"value": 7})");
    EXPECT_EQ(complete_structured<int>(llm, {}, RetryPolicy::no_wait(), parse_value), 7);
}

TEST(StructuredCompletion, TransportRetriesDoNotConsumeTheRepair) {
    ScriptedProvider llm;
    llm.push_timeout();
    llm.push("garbage");
    llm.push_timeout();
    llm.push(R"({"value": 1})");
    EXPECT_EQ(complete_structured<int>(llm, {}, RetryPolicy::no_wait(), parse_value), 1);
}

}  // namespace
}  // namespace podforge
