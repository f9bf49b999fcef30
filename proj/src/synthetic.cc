// Copyright 2026 The TrialNER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "trialner/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <set>
#include <string_view>

#include "trialner/errors.h"
#include "trialner/rng.h"

namespace trialner {
namespace {

// Slots: {AGE} {PREG} {CD} {TR} {CV} are entities; {NUM} {DAYS} are values.
const char* const kTemplates[] = {
    "patients {AGE}",
    "adults {AGE} with confirmed sars cov 2 infection",
    "history of {CD}",
    "known diagnosis of {CD} requiring {TR}",
    "patients with {CD} or {CD}",
    "currently receiving {TR}",
    "treatment with {TR} within the past {DAYS} days",
    "known hypersensitivity to {TR}",
    "{CV} below {NUM} %",
    "{CV} greater than {NUM} times the upper limit of normal",
    "women who are {PREG}",
    "{PREG} at screening",
    "participants {AGE} who are not {PREG}",
    "severe {CD} with {CV} of at least {NUM}",
    "prior {TR} for {CD}",
    "unable to provide written informed consent",
    "participation in another interventional trial within {DAYS} days",
    "{CV} less than {NUM} mmhg despite {TR}",
    "subjects {AGE} hospitalized with {CD}",
    "any condition that in the opinion of the investigator would compromise safety",
    "documented {CD} and stable {TR} for at least {DAYS} weeks",
    "requirement for {TR} at enrollment",
    "female patients who are {PREG} or intend to conceive",
    "abnormal {CV} at baseline",
    "expected survival shorter than {DAYS} days",
    "clinically significant {CD} diagnosed by a physician",
    "receipt of {TR} during the current hospital admission",
    "elevated {CV} measured on two consecutive occasions",
    "enrolled subjects must agree to avoid {TR} throughout follow up",
    "uncontrolled {CD} despite optimal medical management",
    "live vaccine administration within {DAYS} days before randomization",
};

const char* const kAgePhrases[] = {
    "{A} years or older",         "{A} years of age or older",
    "aged {A} to {B} years",      "between {A} and {B} years old",
    "older than {A} years",       "at least {A} years old",
    "under {A} years of age",
};

const char* const kPregnancy[] = {
    "pregnant", "breastfeeding", "lactating", "nursing",
    "pregnant or breastfeeding", "pregnant or nursing",
};

const char* const kChronicDiseases[] = {
    "diabetes mellitus", "type 2 diabetes", "hypertension", "chronic kidney disease",
    "end stage renal disease", "heart failure", "coronary artery disease", "copd",
    "chronic obstructive pulmonary disease", "asthma", "cirrhosis", "chronic hepatitis b",
    "hepatitis c", "hiv infection", "rheumatoid arthritis", "systemic lupus erythematosus",
    "multiple sclerosis", "epilepsy", "dementia", "parkinson disease", "atrial fibrillation",
    "pulmonary fibrosis", "sickle cell disease", "obesity", "hypothyroidism", "crohn disease",
    "ulcerative colitis", "psoriasis", "chronic liver disease", "interstitial lung disease",
    "myasthenia gravis", "cystic fibrosis", "stroke", "chronic pancreatitis",
    "bronchiectasis", "sarcoidosis", "osteoporosis", "gout", "hemophilia",
    "pulmonary arterial hypertension", "chronic venous insufficiency",
    "major depressive disorder", "schizophrenia", "alcoholic hepatitis",
};

const char* const kTreatments[] = {
    "hydroxychloroquine", "chloroquine", "azithromycin", "remdesivir", "tocilizumab",
    "sarilumab", "dexamethasone", "methylprednisolone", "corticosteroids",
    "lopinavir ritonavir", "favipiravir", "ivermectin", "convalescent plasma",
    "mechanical ventilation", "invasive mechanical ventilation",
    "extracorporeal membrane oxygenation", "renal replacement therapy", "dialysis",
    "chemotherapy", "immunosuppressive therapy", "anticoagulation", "heparin", "warfarin",
    "baricitinib", "interferon beta", "colchicine", "vitamin d", "zinc supplementation",
    "nivolumab", "pembrolizumab", "rituximab", "high flow nasal oxygen", "statins",
    "metformin", "insulin", "oseltamivir", "ribavirin", "camostat mesylate",
    "nitazoxanide", "bone marrow transplantation", "plasma exchange", "prone positioning",
};

const char* const kClinicalVariables[] = {
    "oxygen saturation", "spo2", "pao2/fio2 ratio", "respiratory rate", "serum creatinine",
    "creatinine clearance", "egfr", "alt", "ast", "total bilirubin", "platelet count",
    "absolute neutrophil count", "hemoglobin", "qtc interval", "d dimer", "c reactive protein",
    "ferritin", "lymphocyte count", "systolic blood pressure", "heart rate",
    "body mass index", "potassium", "troponin", "lactate", "interleukin 6",
    "procalcitonin", "serum sodium", "fasting glucose", "international normalized ratio",
    "ejection fraction",
};

const char* const kAges[] = {"18", "21", "40", "50", "60", "65", "70", "75", "80", "85"};
const char* const kValues[] = {"90", "92", "94", "95", "100", "150", "200", "300",
                               "1.5", "2.5", "3", "5"};
const char* const kDays[] = {"7", "14", "28", "30", "90"};

const char* const kConditions[] = {
    "COVID-19", "Pneumonia", "ARDS", "Respiratory Failure", "HIV Infections", "Hypertension",
};

template <size_t N>
const char* Pick(Rng& rng, const char* const (&list)[N]) {
  return list[rng.Below(N)];
}

std::vector<std::string> Words(std::string_view text) {
  std::vector<std::string> out;
  for (const Token& t : Tokenize(text)) out.push_back(t.surface);
  return out;
}

// Appends `phrase` with the given entity type ("" for outside).
void Emit(std::string_view phrase, const std::string& type, std::vector<std::string>& words,
          std::vector<std::string>& tags) {
  const std::vector<std::string> w = Words(phrase);
  for (size_t i = 0; i < w.size(); ++i) {
    words.push_back(w[i]);
    tags.push_back(type.empty() ? "O" : (i == 0 ? "B-" : "I-") + type);
  }
}

std::string AgePhrase(Rng& rng) {
  std::string p = Pick(rng, kAgePhrases);
  size_t a = rng.Below(std::size(kAges) - 1);
  size_t b = a + 1 + rng.Below(std::size(kAges) - a - 1);
  if (auto pos = p.find("{A}"); pos != std::string::npos) p.replace(pos, 3, kAges[a]);
  if (auto pos = p.find("{B}"); pos != std::string::npos) p.replace(pos, 3, kAges[b]);
  return p;
}

void EmitTemplate(Rng& rng, std::string_view tmpl, std::vector<std::string>& words,
                  std::vector<std::string>& tags) {
  size_t pos = 0;
  while (pos < tmpl.size()) {
    const size_t open = tmpl.find('{', pos);
    Emit(tmpl.substr(pos, open - pos), "", words, tags);
    if (open == std::string_view::npos) break;
    const size_t close = tmpl.find('}', open);
    const std::string_view slot = tmpl.substr(open + 1, close - open - 1);
    if (slot == "AGE") {
      Emit(AgePhrase(rng), "AGE", words, tags);
    } else if (slot == "PREG") {
      Emit(Pick(rng, kPregnancy), "PREGNANCY", words, tags);
    } else if (slot == "CD") {
      Emit(Pick(rng, kChronicDiseases), "CHRONIC_DISEASE", words, tags);
    } else if (slot == "TR") {
      Emit(Pick(rng, kTreatments), "TREATMENT", words, tags);
    } else if (slot == "CV") {
      Emit(Pick(rng, kClinicalVariables), "CLINICAL_VARIABLE", words, tags);
    } else if (slot == "NUM") {
      Emit(Pick(rng, kValues), "", words, tags);
    } else if (slot == "DAYS") {
      Emit(Pick(rng, kDays), "", words, tags);
    } else {
      throw ContractError("unknown template slot " + std::string(slot));
    }
    pos = close + 1;
  }
}

TaggedSequence MakeSequence(Rng& rng, const std::string& split, int index) {
  std::vector<std::string> words, tags;
  EmitTemplate(rng, Pick(rng, kTemplates), words, tags);
  if (rng.Bernoulli(0.3)) {
    Emit(rng.Bernoulli(0.5) ? "and" : ",", "", words, tags);
    EmitTemplate(rng, Pick(rng, kTemplates), words, tags);
  }
  CriterionRef ref{"synth-" + split, index % 2 == 0 ? Arm::kInclusion : Arm::kExclusion,
                   index};
  return TaggedSequence{CriterionFromTokens(ref, words), std::move(tags)};
}

std::vector<TaggedSequence> MakeSplit(Rng& rng, const std::string& split, size_t n) {
  std::vector<TaggedSequence> out;
  for (size_t i = 0; i < n; ++i) out.push_back(MakeSequence(rng, split, static_cast<int>(i)));
  return out;
}

template <size_t N>
void AddWords(const char* const (&list)[N], std::set<std::string>& vocab) {
  for (const char* p : list) {
    std::string s = p;
    for (const char* slot : {"{A}", "{B}"}) {
      if (auto pos = s.find(slot); pos != std::string::npos) s.replace(pos, 3, " ");
    }
    while (true) {
      const size_t open = s.find('{');
      if (open == std::string::npos) break;
      s.replace(open, s.find('}', open) - open + 1, " ");
    }
    for (const std::string& w : Words(s)) vocab.insert(Lowercase(w));
  }
}

}  // namespace

SyntheticCorpus GenerateCorpus(const SyntheticOptions& options) {
  Rng rng(options.seed, 0);
  SyntheticCorpus corpus;
  corpus.train = MakeSplit(rng, "train", options.train_size);
  corpus.dev = MakeSplit(rng, "dev", options.dev_size);
  corpus.test = MakeSplit(rng, "test", options.test_size);
  return corpus;
}

std::vector<std::string> SyntheticEntityTypes() {
  return {"AGE", "PREGNANCY", "CHRONIC_DISEASE", "TREATMENT", "CLINICAL_VARIABLE"};
}

std::vector<std::string> SyntheticVocabulary() {
  std::set<std::string> vocab = {"and", ","};
  AddWords(kTemplates, vocab);
  AddWords(kAgePhrases, vocab);
  AddWords(kPregnancy, vocab);
  AddWords(kChronicDiseases, vocab);
  AddWords(kTreatments, vocab);
  AddWords(kClinicalVariables, vocab);
  AddWords(kAges, vocab);
  AddWords(kValues, vocab);
  AddWords(kDays, vocab);
  return {vocab.begin(), vocab.end()};
}

PatternFixture GeneratePatternFixture(size_t num_trials, uint64_t seed) {
  Rng rng(seed, 1);
  PatternFixture f;
  for (size_t t = 0; t < num_trials; ++t) {
    TrialRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "NCT9%07zu", t);
    r.trial_id = id;
    std::vector<std::string> pool(std::begin(kConditions), std::end(kConditions));
    rng.Shuffle(pool);
    const size_t n = 1 + rng.Below(3);
    r.conditions.assign(pool.begin(), pool.begin() + n);
    r.eligibility_text = "Inclusion Criteria:\n- adults";
    f.trials.push_back(std::move(r));
  }

  // Each type reaches a fixed share of trials so that a threshold of 10 on
  // 20 trials splits types on both sides of the boundary.
  struct Share {
    const char* type;
    double fraction;
    const char* const* names;
    size_t count;
  };
  const Share shares[] = {
      {"AGE", 1.0, kAgePhrases, std::size(kAgePhrases)},
      {"CHRONIC_DISEASE", 0.75, kChronicDiseases, std::size(kChronicDiseases)},
      {"TREATMENT", 0.55, kTreatments, std::size(kTreatments)},
      {"CLINICAL_VARIABLE", 0.5, kClinicalVariables, std::size(kClinicalVariables)},
      {"PREGNANCY", 0.3, kPregnancy, std::size(kPregnancy)},
  };
  std::vector<size_t> order(num_trials);
  for (size_t i = 0; i < num_trials; ++i) order[i] = i;
  for (const Share& s : shares) {
    rng.Shuffle(order);
    const size_t reach = static_cast<size_t>(s.fraction * num_trials + 0.5);
    for (size_t k = 0; k < reach; ++k) {
      const size_t mentions = 1 + rng.Below(3);
      for (size_t m = 0; m < mentions; ++m) {
        // Skewed toward the head of each list so variable rows differ in size.
        const size_t pick = rng.Below(1 + rng.Below(std::min<size_t>(s.count, 6)));
        std::string name = s.names[pick];
        if (std::string_view(s.type) == "AGE") name = "age " + std::to_string(pick);
        NormalizedVariable v;
        v.canonical = name;
        v.variable_type = s.type;
        v.source = VariableSource::kPassthrough;
        f.variables.push_back({f.trials[order[k]].trial_id, std::move(v)});
      }
    }
  }
  return f;
}

}  // namespace trialner
