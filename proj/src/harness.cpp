#include "tkg/harness.hpp"

#include "tkg/errors.hpp"
#include "tkg/hash.hpp"
#include "tkg/records.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace tkg {

using nlohmann::json;

namespace {

const std::vector<std::string>& person_pool() {
    static const std::vector<std::string> v = {
        "Alice", "Bob",   "Carol", "David",  "Emma",   "Frank", "Grace",  "Henry",
        "Irene", "Jack",  "Karen", "Liam",   "Mona",   "Nathan", "Olivia", "Peter"};
    return v;
}

const std::vector<std::string>& object_pool() {
    static const std::vector<std::string> v = {
        "yellow mug",    "blue notebook", "red scarf",      "green bottle", "silver watch",
        "black umbrella", "white plate",   "leather wallet", "wooden spoon", "glass jar",
        "copper kettle", "woolen blanket", "canvas bag",     "steel thermos", "ceramic vase",
        "cotton towel",  "brass key",      "paper map",      "velvet cushion", "plastic ruler"};
    return v;
}

const std::vector<std::string>& location_pool() {
    static const std::vector<std::string> v = {"kitchen", "living room", "bedroom",
                                               "garden",  "balcony",     "study",
                                               "garage",  "dining room", "hallway",
                                               "attic",   "basement",    "porch"};
    return v;
}

const std::vector<std::string>& activity_pool() {
    static const std::vector<std::string> v = {
        "play the piano", "read a novel",    "water the plants", "practice yoga",
        "write letters",  "paint landscapes", "bake bread",       "sort old photos",
        "repair the bike", "brew coffee"};
    return v;
}

std::vector<ActivityTemplate> resolved_activities(const WorldSpec& spec) {
    if (!spec.activities.empty()) return spec.activities;
    std::vector<ActivityTemplate> out;
    const auto& pool = activity_pool();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        ActivityTemplate t;
        t.verb_phrase = pool[i];
        t.location_index = static_cast<int>((i * 3 + 1) % spec.n_locations);
        out.push_back(std::move(t));
    }
    return out;
}

constexpr int kSlotSeconds = 120;

std::string_view day_part_of(int seconds_of_day) {
    if (seconds_of_day < 21600) return "night";
    if (seconds_of_day < 43200) return "morning";
    if (seconds_of_day < 64800) return "afternoon";
    return "evening";
}

int day_part_index(std::string_view part) {
    if (part == "morning") return 0;
    if (part == "afternoon") return 1;
    if (part == "evening") return 2;
    return -1;
}

bool part_allows(const ActivityTemplate& t, std::string_view part) {
    return t.day_part == "any" || t.day_part == part;
}

Timestamp add_seconds(Timestamp t, int seconds) {
    t.seconds_of_day += seconds;
    while (t.seconds_of_day > 86399) {
        t.seconds_of_day -= 86400;
        ++t.day;
    }
    return t;
}

} // namespace

void WorldSpec::validate() const {
    auto fail = [](const std::string& why) { throw Error(Errc::bad_config, why); };
    if (days < 1) fail("days must be at least 1");
    if (n_persons < 1) fail("need at least one person");
    if (n_persons > static_cast<int>(person_pool().size()))
        fail("person vocabulary holds only " + std::to_string(person_pool().size()) + " names");
    if (n_objects < 0 || n_objects > static_cast<int>(object_pool().size()))
        fail("object vocabulary holds only " + std::to_string(object_pool().size()) + " names");
    if (n_locations < 1 || n_locations > static_cast<int>(location_pool().size()))
        fail("location vocabulary holds only " + std::to_string(location_pool().size()) + " names");
    if (habit_bias < 0.0 || habit_bias > 1.0) fail("habit_bias outside [0,1]");
    if (placement_share < 0.0 || placement_share > 1.0) fail("placement_share outside [0,1]");
    if (placement_share > 0.0 && n_objects == 0) fail("placements need at least one object");
    if (events_per_day < 1) fail("events_per_day must be at least 1");
    if (day_start < 0 || day_end > 86400 || day_start >= day_end) fail("bad day bounds");
    if ((day_end - day_start) / kSlotSeconds < events_per_day)
        fail("day too short: need one free slot per event to keep times strictly increasing");
    std::vector<ActivityTemplate> acts = resolved_activities(*this);
    if (acts.empty()) fail("activity vocabulary is empty");
    for (const ActivityTemplate& t : acts) {
        if (t.verb_phrase.empty()) fail("activity verb phrase is empty");
        if (t.arity != 1) fail("only single-participant activities are supported");
        if (t.location_index < 0 || t.location_index >= n_locations)
            fail("activity location index out of range");
        if (t.day_part != "any" && day_part_index(t.day_part) < 0)
            fail("unknown day part '" + t.day_part + "'");
        if (t.recurrence < 0.0 || t.recurrence > 1.0) fail("recurrence outside [0,1]");
    }
}

std::pair<std::vector<SourceDocument>, GoldLog> generate_world(const WorldSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<ActivityTemplate> acts = resolved_activities(spec);

    GoldLog gold;
    gold.persons.assign(person_pool().begin(), person_pool().begin() + spec.n_persons);
    gold.objects.assign(object_pool().begin(), object_pool().begin() + spec.n_objects);
    gold.locations.assign(location_pool().begin(), location_pool().begin() + spec.n_locations);
    for (const ActivityTemplate& t : acts) gold.activities.push_back(t.verb_phrase);

    // A fixed habitual activity per person per day part gives HabitInsight
    // questions a clear modal answer to find.
    std::vector<std::array<int, 3>> habit(spec.n_persons, {-1, -1, -1});
    for (int p = 0; p < spec.n_persons; ++p) {
        for (int part = 0; part < 3; ++part) {
            const std::string_view label = part == 0 ? "morning" : part == 1 ? "afternoon" : "evening";
            std::vector<int> eligible;
            for (std::size_t a = 0; a < acts.size(); ++a)
                if (part_allows(acts[a], label)) eligible.push_back(static_cast<int>(a));
            if (!eligible.empty()) habit[p][part] = eligible[rng.below(eligible.size())];
        }
    }

    std::vector<SourceDocument> docs;
    const int total_slots = (spec.day_end - spec.day_start) / kSlotSeconds;
    for (int day = 1; day <= spec.days; ++day) {
        SourceDocument doc;
        doc.doc_id = "day" + std::to_string(day);
        std::vector<bool> eligible_today(acts.size());
        for (std::size_t a = 0; a < acts.size(); ++a)
            eligible_today[a] = acts[a].recurrence >= 1.0 || rng.chance(acts[a].recurrence);
        for (int i = 0; i < spec.events_per_day; ++i) {
            const long long slot = static_cast<long long>(i) * total_slots / spec.events_per_day;
            Timestamp t{day, spec.day_start + static_cast<int>(slot) * kSlotSeconds +
                                 static_cast<int>(rng.below(60))};
            const std::string_view part = day_part_of(t.seconds_of_day);
            GoldEvent ev;
            ev.time = t;
            std::string sentence;
            if (spec.n_objects > 0 && rng.chance(spec.placement_share)) {
                const std::size_t oi = rng.below(gold.objects.size());
                ev.kind = GoldKind::placement;
                ev.object = gold.objects[oi];
                ev.person = gold.persons[oi % gold.persons.size()]; // the owner moves it
                ev.location = gold.locations[rng.below(gold.locations.size())];
                sentence = ev.person + " moves the " + ev.object + " to the " + ev.location + ".";
            } else {
                const int p = static_cast<int>(rng.below(gold.persons.size()));
                std::vector<int> eligible;
                for (std::size_t a = 0; a < acts.size(); ++a)
                    if (eligible_today[a] && part_allows(acts[a], part))
                        eligible.push_back(static_cast<int>(a));
                if (eligible.empty()) continue; // nothing can happen in this slot
                int chosen = eligible[rng.below(eligible.size())];
                const int part_idx = day_part_index(part);
                if (part_idx >= 0) {
                    const int hab = habit[p][part_idx];
                    if (hab >= 0 && eligible_today[hab] && part_allows(acts[hab], part) &&
                        rng.chance(spec.habit_bias))
                        chosen = hab;
                }
                ev.kind = GoldKind::activity;
                ev.person = gold.persons[p];
                ev.activity = acts[chosen].verb_phrase;
                ev.location = gold.locations[acts[chosen].location_index];
                sentence = ev.person + " starts to " + ev.activity + " in the " + ev.location + ".";
            }
            doc.segments.push_back({t, sentence});
            gold.events.push_back(std::move(ev));
        }
        docs.push_back(std::move(doc));
    }
    return {std::move(docs), std::move(gold)};
}

// --- caption extraction mock ------------------------------------------------

CaptionExtractor::CaptionExtractor(DelimiterConfig delimiters)
    : delimiters_(std::move(delimiters)) {
    delimiters_.validate();
}

namespace {

struct ParsedSentence {
    std::size_t offset;
    bool placement;
    std::string person;
    std::string phrase; // verb phrase or object name
    std::string location;
};

std::vector<ParsedSentence> scan_sentences(const std::string& text) {
    static const std::regex act_re(R"((\w+) starts to ([\w' ]+?) in the ([\w ]+?)\.)");
    static const std::regex put_re(R"((\w+) moves the ([\w ]+?) to the ([\w ]+?)\.)");
    std::vector<ParsedSentence> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), act_re);
         it != std::sregex_iterator(); ++it)
        out.push_back({static_cast<std::size_t>(it->position(0)), false, (*it)[1], (*it)[2],
                       (*it)[3]});
    for (auto it = std::sregex_iterator(text.begin(), text.end(), put_re);
         it != std::sregex_iterator(); ++it)
        out.push_back({static_cast<std::size_t>(it->position(0)), true, (*it)[1], (*it)[2],
                       (*it)[3]});
    std::sort(out.begin(), out.end(),
              [](const ParsedSentence& a, const ParsedSentence& b) { return a.offset < b.offset; });
    return out;
}

} // namespace

std::string CaptionExtractor::complete(const std::string& prompt) {
    ++calls_;
    const std::string marker = "Text:\n";
    std::size_t pos = prompt.rfind(marker);
    if (pos == std::string::npos)
        throw Error(Errc::client_failure, "extraction prompt lacks a Text section");
    std::string body = prompt.substr(pos + marker.size());
    if (std::size_t tail = body.rfind("\nOutput:"); tail != std::string::npos)
        body = body.substr(0, tail);

    std::optional<Timestamp> anchor;
    std::string text = body;
    if (std::size_t nl = body.find('\n'); nl != std::string::npos) {
        try {
            anchor = parse_timestamp(std::string_view(body).substr(0, nl));
            text = body.substr(nl + 1);
        } catch (const Error&) {
            // no anchor line; treat the whole body as caption text
        }
    }

    std::vector<ExtractionRecord> records;
    std::set<std::string> seen_entities;
    std::set<std::pair<std::string, std::string>> seen_relations;
    auto add_entity = [&](EntityRec rec) {
        std::string key = std::string(to_string(rec.type)) + "\x1f" + normalized_key(rec.name);
        if (seen_entities.insert(key).second) records.push_back(std::move(rec));
    };
    auto add_relation = [&](RelationRec rec) {
        if (seen_relations.insert({rec.source, rec.target}).second)
            records.push_back(std::move(rec));
    };

    for (const ParsedSentence& s : scan_sentences(text)) {
        EntityRec person{s.person, EntityType::person,
                         s.person + " appears in the life log.", {{"name", s.person}}};
        EntityRec place{s.location, EntityType::location,
                        "The " + s.location + " appears in the life log.",
                        {{"name", s.location}}};
        if (s.placement) {
            EntityRec object{s.phrase, EntityType::object,
                             "The " + s.phrase + " belongs to " + s.person + ".",
                             {{"name", s.phrase}, {"owner", s.person}}};
            add_entity(std::move(person));
            add_entity(std::move(object));
            add_entity(std::move(place));
            add_relation({s.person, s.phrase, s.person + " moves this object.",
                          {"object", "movement"}, 8.0});
            add_relation({s.phrase, s.location,
                          "The " + s.phrase + " is placed at the " + s.location + ".",
                          {"placement", "location"}, 9.0});
        } else {
            std::string event_name = s.person + " " + s.phrase;
            EntityRec event{event_name, EntityType::event,
                            s.person + " starts to " + s.phrase + " in the " + s.location + ".",
                            {{"name", event_name}, {"subject", s.person},
                             {"location", s.location}}};
            if (anchor) event.attributes["start_time"] = format_timestamp(*anchor);
            add_entity(std::move(person));
            add_entity(std::move(event));
            add_entity(std::move(place));
            add_relation({s.person, event_name, s.person + " performs this activity.",
                          {"activity", s.person}, 8.0});
            add_relation({event_name, s.location,
                          "The activity takes place in the " + s.location + ".",
                          {"activity", "location"}, 7.0});
        }
    }

    std::string out;
    for (const ExtractionRecord& rec : records) {
        out += serialize_record(rec, delimiters_);
        out += delimiters_.record;
        out += '\n';
    }
    if (!records.empty()) {
        out += serialize_record(KeywordsRec{{"daily life", "activities"}}, delimiters_);
        out += '\n';
    }
    out += delimiters_.completion;
    return out;
}

// --- question generation ----------------------------------------------------

std::string_view to_string(QuestionCategory category) {
    switch (category) {
    case QuestionCategory::entity_log: return "EntityLog";
    case QuestionCategory::event_recall: return "EventRecall";
    case QuestionCategory::habit_insight: return "HabitInsight";
    case QuestionCategory::task_dependency: return "TaskDependency";
    case QuestionCategory::entity_tracking: return "EntityTracking";
    }
    return "?";
}

std::optional<QuestionCategory> question_category_from(std::string_view text) {
    if (text == "EntityLog") return QuestionCategory::entity_log;
    if (text == "EventRecall") return QuestionCategory::event_recall;
    if (text == "HabitInsight") return QuestionCategory::habit_insight;
    if (text == "TaskDependency") return QuestionCategory::task_dependency;
    if (text == "EntityTracking") return QuestionCategory::entity_tracking;
    return std::nullopt;
}

namespace {

constexpr int kQuerySlack = 59; // t_q offset; below the inter-slot gap

struct GoldIndex {
    // (person, verb phrase) -> ascending occurrence times
    std::map<std::pair<std::string, std::string>, std::vector<Timestamp>> occurrences;
    // person -> ascending (time, verb phrase)
    std::map<std::string, std::vector<std::pair<Timestamp, std::string>>> activity_seq;
    // object -> ascending (time, location)
    std::map<std::string, std::vector<std::pair<Timestamp, std::string>>> placements;

    explicit GoldIndex(const GoldLog& gold) {
        for (const GoldEvent& e : gold.events) {
            if (e.kind == GoldKind::activity) {
                occurrences[{e.person, e.activity}].push_back(e.time);
                activity_seq[e.person].push_back({e.time, e.activity});
            } else {
                placements[e.object].push_back({e.time, e.location});
            }
        }
    }
};

// Picks three distractors from pool (minus gold), padding via synth
// when the pool runs dry, then splices gold in at a random position.
std::vector<std::string> make_choices(Rng& rng, const std::string& gold,
                                      std::vector<std::string> pool,
                                      const std::function<std::string(int)>& synth) {
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    std::erase(pool, gold);
    std::vector<std::string> picked;
    while (picked.size() < 3 && !pool.empty()) {
        std::size_t i = rng.below(pool.size());
        picked.push_back(pool[i]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    }
    for (int attempt = 0; picked.size() < 3; ++attempt) {
        if (!synth) throw Error(Errc::insufficient_evidence, "cannot build four distinct options");
        std::string candidate = synth(attempt);
        if (candidate != gold &&
            std::find(picked.begin(), picked.end(), candidate) == picked.end())
            picked.push_back(candidate);
        if (attempt > 64)
            throw Error(Errc::insufficient_evidence, "cannot build four distinct options");
    }
    std::vector<std::string> choices = std::move(picked);
    choices.insert(choices.begin() + static_cast<std::ptrdiff_t>(rng.below(4)), gold);
    return choices;
}

std::string format_shifted(Timestamp t, int minutes) {
    int sod = t.seconds_of_day + minutes * 60;
    if (sod < 0) sod += 86400;
    if (sod > 86399) sod -= 86400;
    return format_timestamp({t.day, sod});
}

} // namespace

std::vector<GeneratedQuestion> generate_questions(const GoldLog& gold,
                                                  std::size_t n_per_category,
                                                  std::uint64_t seed) {
    if (n_per_category == 0) return {};
    if (gold.events.empty())
        throw Error(Errc::insufficient_evidence, "gold log is empty");
    Rng rng(seed);
    GoldIndex index(gold);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [key, times] : index.occurrences) pairs.push_back(key);
    std::vector<std::string> tracked_objects;
    for (const auto& [obj, moves] : index.placements) tracked_objects.push_back(obj);
    std::vector<std::string> persons_with_activity;
    for (const auto& [p, seq] : index.activity_seq) persons_with_activity.push_back(p);

    std::vector<GeneratedQuestion> out;
    std::set<std::string> dedup;
    auto push = [&](GeneratedQuestion q) {
        std::string key = q.text + "@" + format_timestamp(q.t_q);
        if (!dedup.insert(key).second) return false;
        out.push_back(std::move(q));
        return true;
    };
    const std::size_t budget = n_per_category * 80 + 200;
    auto give_up = [&](const char* category) {
        throw Error(Errc::insufficient_evidence,
                    std::string("gold log too sparse for ") + category + " questions");
    };

    // EventRecall: first/last occurrence of a (person, activity) pair.
    for (std::size_t made = 0, tries = 0; made < n_per_category; ++tries) {
        if (tries > budget || pairs.empty()) give_up("EventRecall");
        const auto& [person, vp] = pairs[rng.below(pairs.size())];
        const auto& times = index.occurrences.at({person, vp});
        const std::size_t k = rng.below(times.size());
        const bool first = made % 2 == 0;
        GeneratedQuestion q;
        q.category = QuestionCategory::event_recall;
        q.variant = first ? "first" : "last";
        q.person = person;
        q.activity = vp;
        q.t_q = add_seconds(times[k], kQuerySlack);
        Timestamp gold_t = first ? times.front() : times[k];
        q.evidence_time = gold_t;
        q.gold = format_timestamp(gold_t);
        q.text = "When did " + person + " " + q.variant + " " + vp + "?";
        std::vector<std::string> pool;
        for (const GoldEvent& e : gold.events)
            if (e.kind == GoldKind::activity && e.time != gold_t)
                pool.push_back(format_timestamp(e.time));
        q.choices = make_choices(rng, q.gold, std::move(pool), [&](int i) {
            return format_shifted(gold_t, (i + 1) * 7 + 3);
        });
        if (push(std::move(q))) ++made;
    }

    // EntityLog: occurrence count on one day.
    for (std::size_t made = 0, tries = 0; made < n_per_category; ++tries) {
        if (tries > budget || pairs.empty()) give_up("EntityLog");
        const auto& [person, vp] = pairs[rng.below(pairs.size())];
        const auto& times = index.occurrences.at({person, vp});
        std::vector<int> days;
        for (const Timestamp& t : times)
            if (days.empty() || days.back() != t.day) days.push_back(t.day);
        const int day = days[rng.below(days.size())];
        Timestamp last_on_day{};
        int count = 0;
        for (const Timestamp& t : times)
            if (t.day == day) {
                ++count;
                last_on_day = t;
            }
        GeneratedQuestion q;
        q.category = QuestionCategory::entity_log;
        q.variant = "count";
        q.person = person;
        q.activity = vp;
        q.day = day;
        q.t_q = add_seconds(last_on_day, kQuerySlack);
        q.evidence_time = last_on_day;
        q.gold = std::to_string(count);
        q.text = "How many times did " + person + " " + vp + " on day " + std::to_string(day) +
                 "?";
        q.choices = make_choices(rng, q.gold, {}, [&](int i) {
            int delta = (i / 2 + 1) * (i % 2 == 0 ? 1 : -1);
            return std::to_string(std::max(0, count + delta));
        });
        if (push(std::move(q))) ++made;
    }

    // HabitInsight: strictly modal activity within one day part.
    for (std::size_t made = 0, tries = 0; made < n_per_category; ++tries) {
        if (tries > budget || persons_with_activity.empty()) give_up("HabitInsight");
        const std::string& person =
            persons_with_activity[rng.below(persons_with_activity.size())];
        const char* parts[3] = {"morning", "afternoon", "evening"};
        const std::string part = parts[rng.below(3)];
        const auto range = *time_of_day_seconds(part);
        const GoldEvent& pivot = gold.events[rng.below(gold.events.size())];
        const Timestamp t_q = add_seconds(pivot.time, kQuerySlack);
        std::map<std::string, std::vector<Timestamp>> tally;
        for (const auto& [t, vp] : index.activity_seq.at(person)) {
            if (t > t_q) break;
            if (t.seconds_of_day >= range.first && t.seconds_of_day <= range.second)
                tally[vp].push_back(t);
        }
        const std::string* top = nullptr;
        std::size_t top_n = 0;
        bool strict = false;
        for (const auto& [vp, ts] : tally) {
            if (ts.size() > top_n) {
                top = &vp;
                top_n = ts.size();
                strict = true;
            } else if (ts.size() == top_n) {
                strict = false;
            }
        }
        if (!top || !strict || top_n < 2) continue;
        GeneratedQuestion q;
        q.category = QuestionCategory::habit_insight;
        q.variant = "usual";
        q.person = person;
        q.time_of_day = part;
        q.t_q = t_q;
        q.evidence_time = tally.at(*top).back();
        q.gold = *top;
        q.text = "What does " + person + " usually do in the " + part + "?";
        q.choices = make_choices(rng, q.gold, gold.activities, nullptr);
        if (push(std::move(q))) ++made;
    }

    // TaskDependency: the activity following another within one person's
    // sequence.
    for (std::size_t made = 0, tries = 0; made < n_per_category; ++tries) {
        if (tries > budget || persons_with_activity.empty()) give_up("TaskDependency");
        const std::string& person =
            persons_with_activity[rng.below(persons_with_activity.size())];
        const auto& seq = index.activity_seq.at(person);
        if (seq.size() < 2) continue;
        const std::size_t i = rng.below(seq.size() - 1);
        const auto& [t1, vp1] = seq[i];
        const auto& [t2, vp2] = seq[i + 1];
        if (vp1 == vp2) continue;
        const Timestamp t_q = add_seconds(t2, kQuerySlack);
        bool clean = true;
        for (const GoldEvent& e : gold.events) {
            if (e.time <= t1) continue;
            if (e.time > t_q) break;
            if (e.person != person) continue;
            // between reference and answer nothing else of this person
            // may happen, and the reference must stay the latest match
            if (e.kind == GoldKind::placement && e.time < t2) clean = false;
            if (e.kind == GoldKind::activity && e.activity == vp1) clean = false;
            if (!clean) break;
        }
        if (!clean) continue;
        GeneratedQuestion q;
        q.category = QuestionCategory::task_dependency;
        q.variant = "after";
        q.person = person;
        q.activity = vp1; // the reference activity
        q.t_q = t_q;
        q.evidence_time = t2;
        q.gold = vp2;
        q.text = "What did " + person + " do right after starting to " + vp1 + "?";
        q.choices = make_choices(rng, q.gold, gold.activities, nullptr);
        if (push(std::move(q))) ++made;
    }

    // EntityTracking: an object's location after its latest move.
    for (std::size_t made = 0, tries = 0; made < n_per_category; ++tries) {
        if (tries > budget || tracked_objects.empty()) give_up("EntityTracking");
        const std::string& obj = tracked_objects[rng.below(tracked_objects.size())];
        const auto& moves = index.placements.at(obj);
        const std::size_t k = rng.below(moves.size());
        const auto& [t, loc] = moves[k];
        GeneratedQuestion q;
        q.category = QuestionCategory::entity_tracking;
        q.object_name = obj;
        q.t_q = add_seconds(t, kQuerySlack);
        q.evidence_time = t;
        q.gold = loc;
        if (made % 2 == 0) {
            // only the owner ever moves an object, so any move names them
            std::string owner;
            for (const GoldEvent& e : gold.events)
                if (e.kind == GoldKind::placement && e.object == obj) {
                    owner = e.person;
                    break;
                }
            q.variant = "where_put";
            q.person = owner;
            q.text = "Where did " + owner + " last put the " + obj + "?";
        } else {
            q.variant = "where_seen";
            q.text = "Where was the " + obj + " last seen?";
        }
        q.choices = make_choices(rng, q.gold, gold.locations, nullptr);
        if (push(std::move(q))) ++made;
    }

    return out;
}

namespace {

[[noreturn]] void harness_bug(const GeneratedQuestion& q, const std::string& why) {
    throw Error(Errc::insufficient_evidence, "harness bug on '" + q.text + "': " + why);
}

} // namespace

std::string oracle_answer(const GoldLog& gold, const GeneratedQuestion& q) {
    auto bug = [&](const std::string& why) { harness_bug(q, why); };
    switch (q.category) {
    case QuestionCategory::event_recall: {
        std::optional<Timestamp> best;
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.kind != GoldKind::activity || e.person != q.person ||
                e.activity != q.activity)
                continue;
            if (q.variant == "first") {
                if (!best) best = e.time;
            } else {
                best = e.time;
            }
        }
        if (!best) bug("no occurrence at or before t_q");
        return format_timestamp(*best);
    }
    case QuestionCategory::entity_log: {
        if (!q.day) bug("count question without a day");
        int count = 0;
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.kind == GoldKind::activity && e.person == q.person &&
                e.activity == q.activity && e.time.day == *q.day)
                ++count;
        }
        if (count == 0) bug("no occurrence at or before t_q");
        return std::to_string(count);
    }
    case QuestionCategory::habit_insight: {
        auto range = time_of_day_seconds(q.time_of_day);
        if (!range) bug("unknown day part");
        std::map<std::string, std::pair<std::size_t, Timestamp>> tally; // count, first seen
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.kind != GoldKind::activity || e.person != q.person) continue;
            if (e.time.seconds_of_day < range->first || e.time.seconds_of_day > range->second)
                continue;
            auto [it, fresh] = tally.try_emplace(e.activity, 0, e.time);
            ++it->second.first;
        }
        if (tally.empty()) bug("no observation at or before t_q");
        const std::string* best = nullptr;
        std::size_t best_n = 0;
        Timestamp best_first{};
        for (const auto& [vp, stat] : tally) {
            if (!best || stat.first > best_n ||
                (stat.first == best_n && stat.second < best_first)) {
                best = &vp;
                best_n = stat.first;
                best_first = stat.second;
            }
        }
        return *best;
    }
    case QuestionCategory::task_dependency: {
        std::optional<Timestamp> ref;
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.kind == GoldKind::activity && e.person == q.person &&
                e.activity == q.activity)
                ref = e.time;
        }
        if (!ref) bug("reference activity missing at or before t_q");
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.time <= *ref) continue;
            if (e.kind == GoldKind::activity && e.person == q.person) return e.activity;
        }
        harness_bug(q, "no follow-up activity at or before t_q");
    }
    case QuestionCategory::entity_tracking: {
        const std::string* last = nullptr;
        for (const GoldEvent& e : gold.events) {
            if (e.time > q.t_q) break;
            if (e.kind == GoldKind::placement && e.object == q.object_name)
                last = &e.location;
        }
        if (!last) bug("object never moved at or before t_q");
        return *last;
    }
    }
    harness_bug(q, "unknown category");
}

// --- pipeline glue and evaluation --------------------------------------------

TemporalGraph build_graph_from_chunks(std::vector<Chunk> chunks, const MergePolicy& policy,
                                      TextClient& extractor, EmbeddingProvider* embedder,
                                      MergeReport* report, const std::string& language) {
    std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
        if (a.anchor != b.anchor) return a.anchor < b.anchor;
        return a.chunk_id < b.chunk_id;
    });
    const EntitySchema& schema = EntitySchema::egocentric();
    const DelimiterConfig delimiters{};
    TemporalGraph graph;
    for (const Chunk& chunk : chunks) {
        std::string prompt = render_extraction_prompt(chunk, schema, delimiters, language, "");
        ParsedOutput parsed = parse_extraction_output(extractor.complete(prompt), delimiters,
                                                      schema);
        if (report) {
            for (const ParseFault& f : parsed.faults)
                report->faults.push_back(chunk.chunk_id + ": " + f.reason);
            for (const std::string& f : parsed.attribute_faults)
                report->faults.push_back(chunk.chunk_id + ": " + f);
        }
        MergeReport r = apply_records(graph, chunk, parsed.records, policy, embedder);
        if (report) report->add(r);
    }
    return graph;
}

namespace {

double percentile(std::vector<double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::string gap_bucket(const Timestamp& evidence, const Timestamp& t_q) {
    const long long gap = (static_cast<long long>(t_q.day) - evidence.day) * 86400LL +
                          (t_q.seconds_of_day - evidence.seconds_of_day);
    if (gap <= 3600) return "<=1h";
    if (gap <= 86400) return "<=1d";
    if (gap <= 3 * 86400) return "<=3d";
    return ">3d";
}

} // namespace

EvalReport evaluate(const std::vector<SourceDocument>& docs,
                    const std::vector<GeneratedQuestion>& questions,
                    const EvalOptions& options) {
    CaptionExtractor extractor;
    HashingEmbedder embedder(256, options.embed_seed);
    std::vector<Chunk> chunks = chunk_documents(docs, options.l_max);
    TemporalGraph graph =
        build_graph_from_chunks(std::move(chunks), options.policy, extractor, &embedder);
    RetrievalIndex index = build_index(graph, embedder);

    EvalReport report;
    std::vector<double> latencies;
    for (const GeneratedQuestion& q : questions) {
        QARequest req;
        req.question = q.text;
        req.t_q = q.t_q;
        req.response_type = "Multiple Choice";
        if (!q.choices.empty()) req.choices = q.choices;
        AnswerOptions opt;
        opt.k = options.k;
        const auto t0 = std::chrono::steady_clock::now();
        Answer a = answer(req, graph, index, embedder, options.answering_client, opt);
        const auto t1 = std::chrono::steady_clock::now();
        latencies.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        switch (a.path) {
        case AnswerPath::resolved: ++report.resolved; break;
        case AnswerPath::delegated: ++report.delegated; break;
        case AnswerPath::unanswerable: ++report.unanswerable; break;
        }
        std::string want = q.gold;
        if (!q.choices.empty()) {
            const auto it = std::find(q.choices.begin(), q.choices.end(), q.gold);
            want = std::string(1, static_cast<char>('A' + (it - q.choices.begin())));
        }
        const bool ok = a.text == want;
        auto score = [&](CategoryScore& s) {
            ++s.asked;
            if (ok) ++s.correct;
        };
        score(report.per_category[std::string(to_string(q.category))]);
        score(report.overall);
        score(report.per_day[q.t_q.day]);
        score(report.per_gap[gap_bucket(q.evidence_time, q.t_q)]);
        if (!ok && report.mismatches.size() < 50)
            report.mismatches.push_back(q.text + " | got " + a.text + " | want " + want);
    }
    std::sort(latencies.begin(), latencies.end());
    report.latency_p50_ms = percentile(latencies, 0.50);
    report.latency_p90_ms = percentile(latencies, 0.90);
    report.latency_p99_ms = percentile(latencies, 0.99);
    return report;
}

std::string EvalReport::to_text() const {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << "category          asked  correct  accuracy\n";
    for (const auto& [name, s] : per_category)
        out << name << std::string(name.size() < 18 ? 18 - name.size() : 1, ' ') << s.asked
            << "  " << s.correct << "  " << s.accuracy() << "\n";
    out << "overall           " << overall.asked << "  " << overall.correct << "  "
        << overall.accuracy() << "\n";
    out << "paths: resolved=" << resolved << " delegated=" << delegated
        << " unanswerable=" << unanswerable << "\n";
    out << "latency ms: p50=" << latency_p50_ms << " p90=" << latency_p90_ms
        << " p99=" << latency_p99_ms << "\n";
    out << "by query day:";
    for (const auto& [day, s] : per_day) out << " d" << day << "=" << s.accuracy();
    out << "\nby gap:";
    for (const auto& [bucket, s] : per_gap) out << " " << bucket << "=" << s.accuracy();
    out << "\n";
    return out.str();
}

json EvalReport::to_json() const {
    json per_cat = json::object();
    for (const auto& [name, s] : per_category)
        per_cat[name] = {{"asked", s.asked}, {"correct", s.correct}, {"accuracy", s.accuracy()}};
    json days = json::object();
    for (const auto& [day, s] : per_day)
        days[std::to_string(day)] = {{"asked", s.asked}, {"accuracy", s.accuracy()}};
    json gaps = json::object();
    for (const auto& [bucket, s] : per_gap)
        gaps[bucket] = {{"asked", s.asked}, {"accuracy", s.accuracy()}};
    return {{"per_category", per_cat},
            {"overall",
             {{"asked", overall.asked},
              {"correct", overall.correct},
              {"accuracy", overall.accuracy()}}},
            {"paths",
             {{"resolved", resolved}, {"delegated", delegated}, {"unanswerable", unanswerable}}},
            {"latency_ms",
             {{"p50", latency_p50_ms}, {"p90", latency_p90_ms}, {"p99", latency_p99_ms}}},
            {"by_day", days},
            {"by_gap", gaps},
            {"mismatches", mismatches}};
}

void write_questions_jsonl(std::ostream& out, std::span<const GeneratedQuestion> questions) {
    for (const GeneratedQuestion& q : questions) {
        json j{{"question", q.text}, {"timestamp", format_timestamp(q.t_q)}};
        if (!q.choices.empty()) j["choices"] = q.choices;
        if (!q.gold.empty()) j["gold"] = q.gold;
        j["category"] = std::string(to_string(q.category));
        if (!q.variant.empty()) j["variant"] = q.variant;
        out << j.dump() << '\n';
    }
}

std::vector<GeneratedQuestion> read_questions_jsonl(std::istream& in) {
    std::vector<GeneratedQuestion> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        auto corrupt = [&](const std::string& why) {
            throw Error(Errc::corrupt_stream,
                        "questions line " + std::to_string(lineno) + ": " + why);
        };
        if (j.is_discarded()) corrupt("not valid JSON");
        if (!j.contains("question") || !j["question"].is_string()) corrupt("missing question");
        if (!j.contains("timestamp") || !j["timestamp"].is_string()) corrupt("missing timestamp");
        GeneratedQuestion q;
        q.text = j["question"].get<std::string>();
        try {
            q.t_q = parse_timestamp(j["timestamp"].get<std::string>());
        } catch (const Error& e) {
            corrupt(e.what());
        }
        if (j.contains("choices")) {
            if (!j["choices"].is_array()) corrupt("choices must be an array");
            for (const json& c : j["choices"]) {
                if (!c.is_string()) corrupt("choices must hold strings");
                q.choices.push_back(c.get<std::string>());
            }
        }
        if (j.contains("gold")) {
            if (!j["gold"].is_string()) corrupt("gold must be a string");
            q.gold = j["gold"].get<std::string>();
        }
        if (j.contains("category")) {
            auto cat = question_category_from(j["category"].get<std::string>());
            if (!cat) corrupt("unknown category");
            q.category = *cat;
        }
        if (j.contains("variant") && j["variant"].is_string())
            q.variant = j["variant"].get<std::string>();
        q.evidence_time = q.t_q; // unknown from file; gap reports degrade to zero
        out.push_back(std::move(q));
    }
    return out;
}

} // namespace tkg
