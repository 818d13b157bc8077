// Copyright 2026 The opsum Authors.
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

#include "opsum/extraction.h"

#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "opsum/corpus.h"

namespace opsum {
namespace {

std::set<std::string> WordSets(const std::vector<Phrase> &phrases) {
  std::set<std::string> out;
  for (const Phrase &p : phrases) out.insert(p.surface);
  return out;
}

// "they have a full beer menu and the price is reasonable", parsed with
// amod(menu, full), compound(menu, beer) and nsubj(reasonable, price).
Sentence MenuSentence() {
  return ParseConlluString(
             "# sent_id = menu\n"
             "1\tthey\tthey\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n"
             "2\thave\thave\tVERB\tVBP\t_\t0\troot\t_\t_\n"
             "3\ta\ta\tDET\tDT\t_\t6\tdet\t_\t_\n"
             "4\tfull\tfull\tADJ\tJJ\t_\t6\tamod\t_\t_\n"
             "5\tbeer\tbeer\tNOUN\tNN\t_\t6\tcompound\t_\t_\n"
             "6\tmenu\tmenu\tNOUN\tNN\t_\t2\tobj\t_\t_\n"
             "7\tand\tand\tCCONJ\tCC\t_\t11\tcc\t_\t_\n"
             "8\tthe\tthe\tDET\tDT\t_\t9\tdet\t_\t_\n"
             "9\tprice\tprice\tNOUN\tNN\t_\t11\tnsubj\t_\t_\n"
             "10\tis\tbe\tAUX\tVBZ\t_\t11\tcop\t_\t_\n"
             "11\treasonable\treasonable\tADJ\tJJ\t_\t2\tconj\t_\t_\n")
      .front();
}

Sentence SauceSentence() {
  Sentence s = ParseConlluString(
                   "# sent_id = sauce\n"
                   "1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_\n"
                   "2\tdipping\tdipping\tNOUN\tNN\t_\t3\tcompound\t_\t_\n"
                   "3\tsauce\tsauce\tNOUN\tNN\t_\t6\tnsubj\t_\t_\n"
                   "4\tis\tbe\tAUX\tVBZ\t_\t6\tcop\t_\t_\n"
                   "5\tmy\tmy\tPRON\tPRP$\t_\t6\tnmod:poss\t_\t_\n"
                   "6\tfavourite\tfavourite\tNOUN\tNN\t_\t0\troot\t_\t_\n")
                   .front();
  s.tree = ParseBracketedTree(
      "(ROOT (S (NP (DT the) (NN dipping) (NN sauce)) "
      "(VP (VBZ is) (NP (PRP$ my) (NN favourite)))))");
  return s;
}

TEST(DependencyRuleTest, MenuFigurePhrases) {
  auto phrases = ExtractDependencyPhrases(MenuSentence());
  EXPECT_EQ(WordSets(phrases), (std::set<std::string>{"full beer menu", "price reasonable"}));
  for (const Phrase &p : phrases) EXPECT_EQ(p.source, PhraseSource::kDependency);
  EXPECT_EQ(phrases[0].id, "menu:3,4,5");
}

TEST(DependencyRuleTest, IgnoresNonMatchingTagsAndRelations) {
  auto s = ParseConlluString(
               "1\tthe\t_\t_\tDT\t_\t2\tdet\t_\t_\n"
               "2\tstaff\t_\t_\tNNS\t_\t3\tnsubj\t_\t_\n"
               "3\tleft\t_\t_\tVBD\t_\t0\troot\t_\t_\n"
               "4\tquickly\t_\t_\tRB\t_\t3\tadvmod\t_\t_\n")
               .front();
  EXPECT_TRUE(ExtractDependencyPhrases(s).empty());
}

TEST(DependencyRuleTest, AcceptsSubtypedRelationsAndAdverbs) {
  auto s = ParseConlluString(
               "1\tservice\t_\t_\tNN\t_\t2\tnsubj:pass\t_\t_\n"
               "2\tslowly\t_\t_\tRB\t_\t0\troot\t_\t_\n")
               .front();
  EXPECT_EQ(WordSets(ExtractDependencyPhrases(s)), (std::set<std::string>{"service slowly"}));
}

TEST(ConstituencyRuleTest, SauceFigurePhrase) {
  auto phrases = ExtractConstituencyPhrases(SauceSentence());
  ASSERT_EQ(phrases.size(), 1u);
  EXPECT_EQ(phrases[0].surface, "the dipping sauce is my favourite");
  EXPECT_EQ(phrases[0].token_indices, (std::vector<int>{0, 1, 2, 3, 4, 5}));
}

TEST(ConstituencyRuleTest, NeedsTreeAndNoun) {
  EXPECT_TRUE(ExtractConstituencyPhrases(MenuSentence()).empty());
  Sentence s = ParseConlluString("1\tit\t_\t_\tPRP\t_\t2\tnsubj\t_\t_\n"
                                 "2\tworks\t_\t_\tVBZ\t_\t0\troot\t_\t_\n")
                   .front();
  s.tree = ParseBracketedTree("(S (NP (PRP it)) (VP (VBZ works)))");
  EXPECT_TRUE(ExtractConstituencyPhrases(s).empty());
}

TEST(CandidatesTest, UnionMarksSharedPhrases) {
  Sentence s = ParseConlluString("1\tsoup\t_\t_\tNN\t_\t2\tnsubj\t_\t_\n"
                                 "2\thot\t_\t_\tJJ\t_\t0\troot\t_\t_\n")
                   .front();
  s.tree = ParseBracketedTree("(S (NP (NN soup)) (VP (JJ hot)))");
  auto phrases = ExtractCandidates(s);
  ASSERT_EQ(phrases.size(), 1u);
  EXPECT_EQ(phrases[0].source, PhraseSource::kBoth);

  auto sauce = ExtractCandidates(SauceSentence());
  EXPECT_EQ(WordSets(sauce), (std::set<std::string>{"the dipping sauce is my favourite"}));
}

TEST(CandidatesTest, CorpusExtractionIsThreadIndependent) {
  std::vector<Sentence> corpus;
  for (int i = 0; i < 40; ++i) corpus.push_back(i % 2 ? MenuSentence() : SauceSentence());
  auto serial = ExtractCorpus(corpus, 0);
  auto parallel = ExtractCorpus(corpus, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].id, parallel[i].id);
}

TEST(PhraseIoTest, RoundTrip) {
  auto phrases = ExtractCandidates(MenuSentence());
  std::stringstream buffer;
  WritePhrases(phrases, buffer);
  auto back = ReadPhrases(buffer);
  ASSERT_EQ(back.size(), phrases.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, phrases[i].id);
    EXPECT_EQ(back[i].token_indices, phrases[i].token_indices);
    EXPECT_EQ(back[i].surface, phrases[i].surface);
    EXPECT_EQ(back[i].source, phrases[i].source);
  }
}

}  // namespace
}  // namespace opsum
