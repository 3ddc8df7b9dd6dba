//! Synthetic simple/complex corpus.
//!
//! Every document is generated from a planted simplicity value `s` in
//! `[0, 1]`: simple documents draw `s ~ U(0.6, 1)`, complex ones
//! `s ~ U(0, 0.4)`. The difficulty `1 - s` sets the expected vocabulary level
//! and the rate at which complex constructions (passives, relatives,
//! subordinate and participial clauses, appositions, conditional and compound
//! tenses, fronted connectives, acronyms, numbers) are injected. Documents
//! carry full dependency analyses and constituency trees projected from them,
//! so every indicator is computable.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Label;
use crate::ingest::{write_conllu, ConstituencyNode, Document, Head, Sentence, Token, Upos};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Documents per class; simple and complex documents are paired by index.
    pub docs_per_class: usize,
    pub seed: u64,
    /// Multiplier on the difficulty-driven part of every construction rate.
    pub injection_rate: f64,
    /// Half-width of the per-document style offsets: a document's vocabulary
    /// and syntax are each generated at its planted difficulty plus an
    /// independent `U(-style_spread, style_spread)` offset.
    pub style_spread: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs_per_class: 500,
            seed: 0,
            injection_rate: 1.0,
            style_spread: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDoc {
    pub doc: Document,
    pub label: Label,
    pub pair_id: String,
    pub planted_simplicity: f64,
}

// Vocabulary: (lemma, level). Level 7 marks words absent from the builtin
// graded lexicon, which get its out-of-vocabulary level.
const NOUNS: &[(&str, u8, bool)] = &[
    ("chat", 1, false),
    ("chien", 1, false),
    ("maison", 1, true),
    ("école", 1, true),
    ("ami", 1, false),
    ("jardin", 1, false),
    ("livre", 1, false),
    ("table", 1, true),
    ("ville", 1, true),
    ("rue", 1, true),
    ("pomme", 1, true),
    ("mère", 1, true),
    ("père", 1, false),
    ("voiture", 1, true),
    ("porte", 1, true),
    ("fleur", 1, true),
    ("village", 2, false),
    ("musée", 2, false),
    ("marché", 2, false),
    ("histoire", 2, true),
    ("forêt", 2, true),
    ("famille", 2, true),
    ("fenêtre", 2, true),
    ("lettre", 2, true),
    ("journal", 2, false),
    ("cadeau", 2, false),
    ("projet", 3, false),
    ("région", 3, true),
    ("président", 3, false),
    ("société", 3, true),
    ("gouvernement", 3, false),
    ("économie", 3, true),
    ("entreprise", 3, true),
    ("recherche", 3, true),
    ("science", 3, true),
    ("territoire", 3, false),
    ("dispositif", 4, false),
    ("réglementation", 4, true),
    ("infrastructure", 4, true),
    ("hypothèse", 4, true),
    ("législation", 4, true),
    ("paradigme", 4, false),
    ("processus", 4, false),
    ("mécanisme", 4, false),
    ("prérogative", 5, true),
    ("jurisprudence", 5, true),
    ("corollaire", 5, false),
    ("épistémologie", 5, true),
    ("consortium", 5, false),
    ("palimpseste", 6, false),
    ("herméneutique", 6, true),
    ("oligopole", 6, false),
    ("sinécure", 6, true),
    ("apophtegme", 6, false),
    ("xénogreffe", 7, true),
    ("chronotope", 7, false),
    ("métalepse", 7, true),
    ("parangon", 7, false),
];

/// Regular first-group verbs, so every tense is formed by rule.
const VERBS: &[(&str, u8)] = &[
    ("regarder", 1),
    ("aimer", 1),
    ("trouver", 1),
    ("chercher", 1),
    ("porter", 1),
    ("montrer", 1),
    ("donner", 1),
    ("habiter", 1),
    ("visiter", 2),
    ("préparer", 2),
    ("écouter", 2),
    ("raconter", 2),
    ("dessiner", 2),
    ("expliquer", 3),
    ("observer", 3),
    ("utiliser", 3),
    ("organiser", 3),
    ("présenter", 3),
    ("analyser", 4),
    ("examiner", 4),
    ("déterminer", 4),
    ("élaborer", 4),
    ("consolider", 4),
    ("réglementer", 5),
    ("subventionner", 5),
    ("préconiser", 5),
    ("entériner", 5),
    ("corroborer", 5),
    ("amalgamer", 6),
    ("stigmatiser", 6),
    ("subsumer", 6),
    ("promulguer", 6),
    ("thésauriser", 7),
    ("ostraciser", 7),
    ("compulser", 7),
];

/// Adjectives whose masculine and feminine forms coincide.
const ADJECTIVES: &[(&str, u8)] = &[
    ("rapide", 1),
    ("simple", 1),
    ("calme", 1),
    ("jeune", 1),
    ("rouge", 1),
    ("facile", 1),
    ("triste", 1),
    ("pauvre", 1),
    ("riche", 1),
    ("jaune", 1),
    ("célèbre", 2),
    ("utile", 2),
    ("fragile", 2),
    ("large", 2),
    ("drôle", 2),
    ("politique", 3),
    ("économique", 3),
    ("historique", 3),
    ("moderne", 3),
    ("pratique", 3),
    ("considérable", 4),
    ("indispensable", 4),
    ("hétérogène", 4),
    ("systématique", 4),
    ("emblématique", 5),
    ("prolifique", 5),
    ("inextricable", 5),
    ("intrinsèque", 5),
    ("apodictique", 6),
    ("ineffable", 6),
    ("nomothétique", 7),
    ("idiosyncratique", 7),
    ("isomorphe", 7),
];

const ADVERBS: &[(&str, u8)] = &[
    ("souvent", 1),
    ("toujours", 1),
    ("vite", 1),
    ("bien", 1),
    ("ensemble", 2),
    ("considérablement", 4),
    ("préalablement", 5),
    ("subrepticement", 6),
    ("sempiternellement", 7),
];

const NAMES: &[&str] = &["Marie", "Paul", "Lucie", "Thomas", "Claire", "Hugo"];
const ACRONYMS: &[&str] = &["SNCF", "ONU", "OCDE", "UNESCO", "INSEE", "CNRS"];

const SIMPLE_ADVERBIALS: &[&[&str]] = &[&["Ensuite"], &["Alors"], &["Puis"], &["Enfin"], &["Ainsi"], &["Donc"]];
const COMPLEX_ADVERBIALS: &[&[&str]] = &[
    &["Toutefois"],
    &["Néanmoins"],
    &["En", "revanche"],
    &["Par", "conséquent"],
    &["En", "outre"],
    &["Par", "ailleurs"],
];
/// Subordinators: tokens and whether they take the subjunctive.
const SIMPLE_SUBORDINATORS: &[(&[&str], bool)] = &[
    (&["Quand"], false),
    (&["Lorsque"], false),
    (&["Puisque"], false),
    (&["Parce", "que"], false),
];
const COMPLEX_SUBORDINATORS: &[(&[&str], bool)] = &[
    (&["Bien", "que"], true),
    (&["Afin", "que"], true),
    (&["Quoique"], true),
    (&["Tandis", "que"], false),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Base {
    Pres,
    Imp,
    Fut,
    Past,
    Cnd,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct VTense {
    base: Base,
    compound: bool,
}

impl VTense {
    const fn simple(base: Base) -> Self {
        VTense { base, compound: false }
    }
}

const EASY_TENSES: &[VTense] = &[
    VTense::simple(Base::Pres),
    VTense::simple(Base::Imp),
    VTense::simple(Base::Fut),
    VTense { base: Base::Pres, compound: true },
];
const HARD_TENSES: &[VTense] = &[
    VTense::simple(Base::Past),
    VTense::simple(Base::Cnd),
    VTense { base: Base::Imp, compound: true },
    VTense { base: Base::Fut, compound: true },
    VTense { base: Base::Cnd, compound: true },
];

fn stem(inf: &str) -> &str {
    &inf[..inf.len() - 2]
}

fn verb_form(inf: &str, base: Base) -> String {
    match base {
        Base::Pres | Base::Sub => format!("{}e", stem(inf)),
        Base::Imp => format!("{}ait", stem(inf)),
        Base::Fut => format!("{inf}a"),
        Base::Past => format!("{}a", stem(inf)),
        Base::Cnd => format!("{inf}ait"),
    }
}

fn participle(inf: &str, fem: bool) -> String {
    format!("{}é{}", stem(inf), if fem { "e" } else { "" })
}

fn irregular(lemma: &str, base: Base) -> &'static str {
    let forms: [&str; 6] = match lemma {
        "avoir" => ["a", "avait", "aura", "eut", "aurait", "ait"],
        "être" => ["est", "était", "sera", "fut", "serait", "soit"],
        "pouvoir" => ["peut", "pouvait", "pourra", "put", "pourrait", "puisse"],
        "devoir" => ["doit", "devait", "devra", "dut", "devrait", "doive"],
        "dire" => ["dit", "disait", "dira", "dit", "dirait", "dise"],
        other => unreachable!("no irregular table for {other}"),
    };
    forms[base as usize]
}

fn finite_feats(base: Base) -> Vec<(&'static str, &'static str)> {
    let (mood, tense) = match base {
        Base::Pres => ("Ind", "Pres"),
        Base::Imp => ("Ind", "Imp"),
        Base::Fut => ("Ind", "Fut"),
        Base::Past => ("Ind", "Past"),
        Base::Cnd => ("Cnd", "Pres"),
        Base::Sub => ("Sub", "Pres"),
    };
    vec![
        ("Mood", mood),
        ("Number", "Sing"),
        ("Person", "3"),
        ("Tense", tense),
        ("VerbForm", "Fin"),
    ]
}

fn starts_with_vowel(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| "aeiouhéèêàâîôûAEIOUHÉ".contains(c))
}

struct Tok {
    form: String,
    lemma: String,
    upos: Upos,
    feats: Vec<(&'static str, &'static str)>,
    head: Option<usize>,
    deprel: &'static str,
}

#[derive(Default)]
struct Builder {
    toks: Vec<Tok>,
}

impl Builder {
    fn push(
        &mut self,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: Upos,
        deprel: &'static str,
        feats: Vec<(&'static str, &'static str)>,
    ) -> usize {
        self.toks.push(Tok {
            form: form.into(),
            lemma: lemma.into(),
            upos,
            feats,
            head: None,
            deprel,
        });
        self.toks.len() - 1
    }

    fn attach(&mut self, dep: usize, head: usize) {
        self.toks[dep].head = Some(head);
    }

    fn punct(&mut self, form: &str, head: usize) -> usize {
        let i = self.push(form, form, Upos::Punct, "punct", vec![]);
        self.attach(i, head);
        i
    }

    /// Attaches `deps` to `head` and relabels them.
    fn attach_all(&mut self, deps: &[(usize, &'static str)], head: usize) {
        for &(d, rel) in deps {
            self.toks[d].deprel = rel;
            self.attach(d, head);
        }
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    /// Difficulty driving vocabulary choice.
    lexical: f64,
    /// Difficulty driving construction rates.
    syntactic: f64,
    rate: f64,
}

impl Gen<'_> {
    fn coin(&mut self, base: f64, slope: f64) -> bool {
        let p = (base + slope * self.syntactic * self.rate).clamp(0.0, 1.0);
        self.rng.random_bool(p)
    }

    /// Vocabulary level centred on `1 + 5d`.
    fn level(&mut self) -> u8 {
        let mu = 1.0 + 5.0 * self.lexical;
        let weights: Vec<f64> = (1..=7)
            .map(|l| {
                let w = (-(l as f64 - mu).powi(2) / (2.0 * 0.8 * 0.8)).exp();
                if l == 7 { 0.5 * w } else { w }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i as u8 + 1;
            }
            u -= w;
        }
        7
    }

    fn pick<T: Copy>(&mut self, table: &[T], level_of: impl Fn(&T) -> u8) -> T {
        let want = self.level();
        let nearest = table
            .iter()
            .map(|t| (level_of(t) as i32 - want as i32).abs())
            .min()
            .unwrap_or(0);
        let options: Vec<T> = table
            .iter()
            .filter(|t| (level_of(t) as i32 - want as i32).abs() == nearest)
            .copied()
            .collect();
        *options.choose(self.rng).expect("vocabulary tables are not empty")
    }

    fn noun(&mut self) -> (&'static str, bool) {
        let (lemma, _, fem) = self.pick(NOUNS, |n| n.1);
        (lemma, fem)
    }

    fn verb(&mut self) -> &'static str {
        self.pick(VERBS, |v| v.1).0
    }

    fn adjective(&mut self) -> &'static str {
        self.pick(ADJECTIVES, |a| a.1).0
    }

    fn adverb(&mut self) -> &'static str {
        self.pick(ADVERBS, |a| a.1).0
    }

    fn choose<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty")
    }

    /// Determiner + noun with optional modifiers. Returns the noun index and
    /// its gender. `room` bounds recursive nesting.
    fn noun_phrase(&mut self, b: &mut Builder, room: usize) -> (usize, bool) {
        let (lemma, fem) = self.noun();
        let det_form = if starts_with_vowel(lemma) {
            "l'"
        } else if fem {
            "la"
        } else {
            "le"
        };
        let det = b.push(det_form, "le", Upos::Det, "det", vec![("Definite", "Def"), ("PronType", "Art")]);
        let gender = if fem { "Fem" } else { "Masc" };
        let noun = b.push(lemma, lemma, Upos::Noun, "obj", vec![("Gender", gender), ("Number", "Sing")]);
        b.attach(det, noun);
        if self.coin(0.15, 0.45) {
            let adj = self.adjective();
            let a = b.push(adj, adj, Upos::Adj, "amod", vec![("Number", "Sing")]);
            b.attach(a, noun);
        }
        if room > 0 && self.coin(0.05, 0.5) {
            let case = b.push("de", "de", Upos::Adp, "case", vec![]);
            let (inner, _) = self.noun_phrase(b, room - 1);
            b.attach(case, inner);
            b.toks[inner].deprel = "nmod";
            b.attach(inner, noun);
        }
        if room > 0 && self.coin(0.0, 0.12) {
            let open = b.push("(", "(", Upos::Punct, "punct", vec![]);
            let acr = self.choose(ACRONYMS);
            let a = b.push(acr, acr, Upos::Propn, "appos", vec![]);
            b.attach(open, a);
            b.punct(")", a);
            b.attach(a, noun);
        }
        if room > 0 && self.coin(0.03, 0.4) {
            let rel = b.push("qui", "qui", Upos::Pron, "nsubj", vec![("PronType", "Rel")]);
            let base = self.choose(&[Base::Pres, Base::Imp]);
            let lemma = self.verb();
            let v = b.push(verb_form(lemma, base), lemma, Upos::Verb, "acl:relcl", finite_feats(base));
            b.attach(rel, v);
            let (obj, _) = self.noun_phrase(b, room - 1);
            b.attach_all(&[(obj, "obj")], v);
            b.attach(v, noun);
        }
        (noun, fem)
    }

    /// Subject: a noun phrase or, now and then, a name.
    fn subject(&mut self, b: &mut Builder) -> (usize, bool) {
        if self.coin(0.1, 0.0) {
            let title = self.coin(0.0, 0.3);
            let name = self.choose(NAMES);
            if title {
                let m = b.push("M.", "monsieur", Upos::Noun, "nsubj", vec![("Abbr", "Yes")]);
                let n = b.push(name, name, Upos::Propn, "flat:name", vec![]);
                b.attach(n, m);
                return (m, false);
            }
            let n = b.push(name, name, Upos::Propn, "nsubj", vec![]);
            return (n, false);
        }
        let (np, fem) = self.noun_phrase(b, 2);
        if self.coin(0.0, 0.25) {
            let comma = b.push(",", ",", Upos::Punct, "punct", vec![]);
            let (app, _) = self.noun_phrase(b, 1);
            b.attach(comma, app);
            b.attach_all(&[(app, "appos")], np);
            b.punct(",", app);
        }
        (np, fem)
    }

    /// A finite clause `subject verb object`, returning the predicate head.
    /// Used for subordinate clauses, which stay short.
    fn small_clause(&mut self, b: &mut Builder, base: Base) -> usize {
        let (subj, _) = self.noun_phrase(b, 0);
        let lemma = self.verb();
        let v = b.push(verb_form(lemma, base), lemma, Upos::Verb, "root", finite_feats(base));
        b.attach_all(&[(subj, "nsubj")], v);
        let (obj, _) = self.noun_phrase(b, 0);
        b.attach_all(&[(obj, "obj")], v);
        v
    }

    fn sentence(&mut self, tense: VTense) -> Sentence {
        let mut b = Builder::default();
        if self.coin(0.0, 0.15) {
            return self.cleft(b);
        }
        // Dependents of the main predicate created before it exists.
        let mut pending: Vec<(usize, &'static str)> = Vec::new();

        if self.coin(0.1, 0.25) {
            let words = if self.coin(0.0, 1.0) {
                self.choose(COMPLEX_ADVERBIALS)
            } else {
                self.choose(SIMPLE_ADVERBIALS)
            };
            let first = b.push(words[0], words[0].to_lowercase(), Upos::Adv, "advmod", vec![]);
            for w in &words[1..] {
                let t = b.push(*w, *w, Upos::Adv, "fixed", vec![]);
                b.attach(t, first);
            }
            pending.push((first, "advmod"));
            let comma = b.push(",", ",", Upos::Punct, "punct", vec![]);
            pending.push((comma, "punct"));
        } else if self.coin(0.03, 0.4) {
            let (words, subjunctive) = if self.coin(0.0, 1.0) {
                self.choose(COMPLEX_SUBORDINATORS)
            } else {
                self.choose(SIMPLE_SUBORDINATORS)
            };
            let first = b.push(words[0], words[0].to_lowercase(), Upos::Sconj, "mark", vec![]);
            for w in &words[1..] {
                let t = b.push(*w, *w, Upos::Sconj, "fixed", vec![]);
                b.attach(t, first);
            }
            let base = if subjunctive { Base::Sub } else { Base::Pres };
            let v = self.small_clause(&mut b, base);
            b.attach(first, v);
            b.punct(",", v);
            pending.push((v, "advcl"));
        }

        let (subj, fem) = self.subject(&mut b);
        if self.coin(0.0, 0.12) {
            let open = b.push("-", "-", Upos::Punct, "punct", vec![]);
            let je = b.push("je", "je", Upos::Pron, "nsubj", vec![("Person", "1"), ("PronType", "Prs")]);
            let pense = b.push("pense", "penser", Upos::Verb, "parataxis", finite_feats(Base::Pres));
            b.attach(open, pense);
            b.attach(je, pense);
            b.punct("-", pense);
            pending.push((pense, "parataxis"));
        }

        let negated = self.coin(0.03, 0.3);
        let passive = self.coin(0.03, 0.45);
        let modal = !passive && !tense.compound && self.coin(0.05, 0.4);
        let saying = !passive && !modal && self.coin(0.0, 0.2);

        let neg = |b: &mut Builder, next: &str| {
            let form = if starts_with_vowel(next) { "n'" } else { "ne" };
            b.push(form, "ne", Upos::Adv, "advmod", vec![("Polarity", "Neg")])
        };
        let after_finite = |g: &mut Self, b: &mut Builder, pending: &mut Vec<(usize, &'static str)>| {
            if negated {
                let pas = b.push("pas", "pas", Upos::Adv, "advmod", vec![("Polarity", "Neg")]);
                pending.push((pas, "advmod"));
            }
            if g.coin(0.0, 0.15) {
                let (words, _) = (g.choose(&[&["ensuite"][..], &["toutefois"], &["néanmoins"], &["alors"]]), ());
                let w = b.push(words[0], words[0], Upos::Adv, "advmod", vec![]);
                pending.push((w, "advmod"));
            }
        };

        let main;
        if modal {
            let lemma = self.choose(&["pouvoir", "devoir"]);
            let form = irregular(lemma, tense.base);
            if negated {
                let n = neg(&mut b, form);
                pending.push((n, "advmod"));
            }
            main = b.push(form, lemma, Upos::Verb, "root", finite_feats(tense.base));
            after_finite(self, &mut b, &mut pending);
            let inf = self.verb();
            let x = b.push(inf, inf, Upos::Verb, "xcomp", vec![("VerbForm", "Inf")]);
            b.attach(x, main);
            let (obj, _) = self.noun_phrase(&mut b, 2);
            b.attach_all(&[(obj, "obj")], x);
            pending.push((subj, "nsubj"));
        } else if passive {
            let lemma = self.verb();
            let mut aux_deps = Vec::new();
            if tense.compound {
                let form = irregular("avoir", tense.base);
                if negated {
                    aux_deps.push((neg(&mut b, form), "advmod"));
                }
                let a = b.push(form, "avoir", Upos::Aux, "aux", finite_feats(tense.base));
                aux_deps.push((a, "aux"));
                after_finite(self, &mut b, &mut pending);
                let ete = b.push("été", "être", Upos::Aux, "aux:pass", vec![("Tense", "Past"), ("VerbForm", "Part")]);
                aux_deps.push((ete, "aux:pass"));
            } else {
                let form = irregular("être", tense.base);
                if negated {
                    aux_deps.push((neg(&mut b, form), "advmod"));
                }
                let a = b.push(form, "être", Upos::Aux, "aux:pass", finite_feats(tense.base));
                aux_deps.push((a, "aux:pass"));
                after_finite(self, &mut b, &mut pending);
            }
            let mut feats = vec![("Tense", "Past"), ("VerbForm", "Part"), ("Voice", "Pass")];
            if fem {
                feats.push(("Gender", "Fem"));
            }
            main = b.push(participle(lemma, fem), lemma, Upos::Verb, "root", feats);
            b.attach_all(&aux_deps, main);
            let par = b.push("par", "par", Upos::Adp, "case", vec![]);
            let (agent, _) = self.noun_phrase(&mut b, 1);
            b.attach(par, agent);
            b.attach_all(&[(agent, "obl:agent")], main);
            pending.push((subj, "nsubj:pass"));
        } else {
            let lemma = if saying {
                self.choose(&["montrer", "expliquer", "préconiser"])
            } else {
                self.verb()
            };
            let mut aux_deps = Vec::new();
            if tense.compound {
                let form = irregular("avoir", tense.base);
                if negated {
                    aux_deps.push((neg(&mut b, form), "advmod"));
                }
                let a = b.push(form, "avoir", Upos::Aux, "aux", finite_feats(tense.base));
                aux_deps.push((a, "aux"));
                after_finite(self, &mut b, &mut pending);
                main = b.push(participle(lemma, false), lemma, Upos::Verb, "root", vec![("Tense", "Past"), ("VerbForm", "Part")]);
            } else {
                let form = verb_form(lemma, tense.base);
                if negated {
                    aux_deps.push((neg(&mut b, &form), "advmod"));
                }
                main = b.push(form, lemma, Upos::Verb, "root", finite_feats(tense.base));
                after_finite(self, &mut b, &mut pending);
            }
            b.attach_all(&aux_deps, main);
            if saying {
                let que = b.push("que", "que", Upos::Sconj, "mark", vec![]);
                let v = self.small_clause(&mut b, Base::Pres);
                if starts_with_vowel(&b.toks[que + 1].form) {
                    b.toks[que].form = "qu'".into();
                }
                b.attach(que, v);
                b.attach_all(&[(v, "ccomp")], main);
            } else if self.coin(0.0, 0.2) {
                // Enumeration: N , N , N et N.
                let (first, _) = self.noun_phrase(&mut b, 0);
                b.attach_all(&[(first, "obj")], main);
                let n = self.rng.random_range(3..=4);
                for k in 0..n {
                    let sep = if k + 1 == n {
                        b.push("et", "et", Upos::Cconj, "cc", vec![])
                    } else {
                        b.push(",", ",", Upos::Punct, "punct", vec![])
                    };
                    let (item, _) = self.noun_phrase(&mut b, 0);
                    b.attach(sep, item);
                    b.attach_all(&[(item, "conj")], first);
                }
            } else {
                let (obj, _) = self.noun_phrase(&mut b, 2);
                b.attach_all(&[(obj, "obj")], main);
            }
            pending.push((subj, "nsubj"));
        }

        if self.coin(0.15, 0.15) {
            let adv = self.adverb();
            let a = b.push(adv, adv, Upos::Adv, "advmod", vec![]);
            b.attach(a, main);
        }
        if self.coin(0.05, 0.3) {
            let en = b.push("en", "en", Upos::Adp, "case", vec![]);
            let year = self.rng.random_range(1800..2030).to_string();
            let y = b.push(year.clone(), year, Upos::Num, "obl:mod", vec![("NumType", "Card")]);
            b.attach(en, y);
            b.attach(y, main);
        }
        if self.coin(0.05, 0.3) {
            let et = b.push("et", "et", Upos::Cconj, "cc", vec![]);
            let lemma = self.verb();
            let v = if tense.compound || passive {
                b.push(participle(lemma, false), lemma, Upos::Verb, "conj", vec![("Tense", "Past"), ("VerbForm", "Part")])
            } else if modal {
                b.push(lemma, lemma, Upos::Verb, "conj", vec![("VerbForm", "Inf")])
            } else {
                b.push(verb_form(lemma, tense.base), lemma, Upos::Verb, "conj", finite_feats(tense.base))
            };
            b.attach(et, v);
            let (obj, _) = self.noun_phrase(&mut b, 1);
            b.attach_all(&[(obj, "obj")], v);
            b.attach(v, main);
        }
        if self.coin(0.0, 0.2) {
            let comma = b.push(",", ",", Upos::Punct, "punct", vec![]);
            let lemma = self.verb();
            let p = b.push(participle(lemma, false), lemma, Upos::Verb, "advcl", vec![("Tense", "Past"), ("VerbForm", "Part")]);
            b.attach(comma, p);
            let par = b.push("par", "par", Upos::Adp, "case", vec![]);
            let (agent, _) = self.noun_phrase(&mut b, 0);
            b.attach(par, agent);
            b.attach_all(&[(agent, "obl:agent")], p);
            b.attach(p, main);
        }
        b.attach_all(&pending, main);
        b.punct(".", main);
        finish(b)
    }

    /// `C'est le N qui V le N .`
    fn cleft(&mut self, mut b: Builder) -> Sentence {
        let ce = b.push("C'", "ce", Upos::Pron, "nsubj", vec![("PronType", "Dem")]);
        let est = b.push("est", "être", Upos::Aux, "cop", finite_feats(Base::Pres));
        let (np, _) = self.noun_phrase(&mut b, 0);
        b.attach(ce, np);
        b.attach(est, np);
        b.toks[np].deprel = "root";
        let qui = b.push("qui", "qui", Upos::Pron, "nsubj", vec![("PronType", "Rel")]);
        let lemma = self.verb();
        let v = b.push(verb_form(lemma, Base::Pres), lemma, Upos::Verb, "acl:relcl", finite_feats(Base::Pres));
        b.attach(qui, v);
        let (obj, _) = self.noun_phrase(&mut b, 1);
        b.attach_all(&[(obj, "obj")], v);
        b.attach(v, np);
        b.punct(".", np);
        finish(b)
    }
}

fn phrase_label(upos: Upos) -> &'static str {
    match upos {
        Upos::Noun | Upos::Propn | Upos::Pron | Upos::Num => "NP",
        Upos::Verb | Upos::Aux => "VP",
        Upos::Adj => "AP",
        Upos::Adv => "AdP",
        Upos::Adp => "PP",
        _ => "XP",
    }
}

/// Constituency tree projected from a projective dependency tree: every
/// token with dependents heads a phrase spanning its subtree.
fn project(tokens: &[Token], deps: &[Vec<usize>], i: usize) -> ConstituencyNode {
    let leaf = ConstituencyNode::leaf(tokens[i].upos.as_str(), tokens[i].form.clone());
    if deps[i].is_empty() {
        return leaf;
    }
    let mut members = deps[i].clone();
    members.push(i);
    members.sort_unstable();
    let mut leaf = Some(leaf);
    let children = members
        .into_iter()
        .map(|j| {
            if j == i {
                leaf.take().expect("head appears once")
            } else {
                project(tokens, deps, j)
            }
        })
        .collect();
    ConstituencyNode::node(phrase_label(tokens[i].upos), children)
}

fn finish(b: Builder) -> Sentence {
    let tokens: Vec<Token> = b
        .toks
        .into_iter()
        .map(|t| Token {
            form: t.form,
            lemma: t.lemma,
            upos: t.upos,
            feats: t
                .feats
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            head: t.head.map_or(Head::Root, Head::Index),
            deprel: if t.head.is_none() { "root".into() } else { t.deprel.into() },
        })
        .collect();
    let mut sentence = Sentence::new(tokens, 0);
    debug_assert!(sentence.check_tree().is_ok());
    let deps = sentence.dependents();
    if let Some(root) = sentence.root() {
        sentence.const_tree = Some(ConstituencyNode::node(
            "SENT",
            vec![project(&sentence.tokens, &deps, root)],
        ));
    }
    sentence
}

/// Generates one document whose constructions and vocabulary follow
/// `difficulty` in `[0, 1]`, each shifted by its own style offset.
pub fn generate_document(
    id: &str,
    difficulty: f64,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> Document {
    let mut offset = || {
        if config.style_spread > 0.0 {
            rng.random_range(-config.style_spread..=config.style_spread)
        } else {
            0.0
        }
    };
    let (lexical, syntactic) = (offset(), offset());
    let mut g = Gen {
        rng,
        lexical: (difficulty + lexical).clamp(0.0, 1.0),
        syntactic: (difficulty + syntactic).clamp(0.0, 1.0),
        rate: config.injection_rate.max(0.0),
    };
    let n_sentences = g.rng.random_range(6..=10);
    let mut sentences = Vec::with_capacity(n_sentences);
    let mut paragraph = 0;
    let mut tense = g.paragraph_tense();
    for k in 0..n_sentences {
        if k > 0 && g.rng.random_bool(0.3) {
            paragraph += 1;
            tense = g.paragraph_tense();
        } else if k > 0 && g.coin(0.05, 0.5) {
            tense = g.paragraph_tense();
        }
        let mut s = g.sentence(tense);
        s.paragraph_id = paragraph;
        s.sent_id = Some(format!("{id}-s{}", k + 1));
        sentences.push(s);
    }
    Document::new(id, sentences).expect("generated documents are non-empty")
}

impl Gen<'_> {
    fn paragraph_tense(&mut self) -> VTense {
        if self.coin(0.05, 0.55) {
            self.choose(HARD_TENSES)
        } else {
            self.choose(EASY_TENSES)
        }
    }
}

/// Generates `docs_per_class` aligned pairs. Document `i` of each class has
/// its own random stream, so any document can be regenerated alone.
pub fn generate_corpus(config: &SynthConfig) -> Vec<SynthDoc> {
    let mut out = Vec::with_capacity(2 * config.docs_per_class);
    for (label, range, offset) in [(Label::Simple, 0.6..1.0, 0), (Label::Complex, 0.0..0.4, 1)] {
        for i in 0..config.docs_per_class {
            let pair_id = format!("doc{:04}", i + 1);
            let mut rng = rng::derived(config.seed, 2 * i as u64 + offset);
            let s: f64 = rng.random_range(range.clone());
            let id = format!("{}/{pair_id}", label.as_str());
            let doc = generate_document(&id, 1.0 - s, config, &mut rng);
            out.push(SynthDoc {
                doc,
                label,
                pair_id,
                planted_simplicity: s,
            });
        }
    }
    out
}

/// Writes `root/{simple,complex}/<pair>.conllu` with `.trees` sidecars, and
/// `root/planted.tsv` listing every document's planted simplicity.
pub fn write_corpus(root: &Path, docs: &[SynthDoc]) -> io::Result<()> {
    for label in [Label::Simple, Label::Complex] {
        fs::create_dir_all(root.join(label.as_str()))?;
    }
    for d in docs {
        let dir = root.join(d.label.as_str());
        let mut conllu = io::BufWriter::new(fs::File::create(dir.join(format!("{}.conllu", d.pair_id)))?);
        write_conllu(std::slice::from_ref(&d.doc), &mut conllu)?;
        conllu.flush()?;
        let mut trees = io::BufWriter::new(fs::File::create(dir.join(format!("{}.trees", d.pair_id)))?);
        for s in &d.doc.sentences {
            if let (Some(id), Some(tree)) = (&s.sent_id, &s.const_tree) {
                writeln!(trees, "{id}\t{}", tree.to_bracketed())?;
            }
        }
        trees.flush()?;
    }
    let mut planted = io::BufWriter::new(fs::File::create(root.join("planted.tsv"))?);
    writeln!(planted, "doc_id\tlabel\tplanted_simplicity")?;
    for d in docs {
        writeln!(planted, "{}\t{}\t{}", d.doc.id, d.label.as_int(), d.planted_simplicity)?;
    }
    planted.flush()
}

/// Reads `planted.tsv` into a map from document id to planted simplicity.
pub fn read_planted(path: &Path) -> io::Result<BTreeMap<String, f64>> {
    let invalid = |line: usize, msg: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {msg}", path.display()))
    };
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(invalid(i + 1, "expected 3 columns"));
        }
        let value: f64 = cols[2].parse().map_err(|_| invalid(i + 1, "bad planted value"))?;
        out.insert(cols[0].to_string(), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::extract_features;
    use crate::ingest::read_conllu_file;
    use crate::lexicons::{GradedLexicon, Lexicons};

    #[test]
    fn vocabulary_levels_match_builtin_lexicon() {
        let graded = GradedLexicon::builtin();
        let levels = NOUNS
            .iter()
            .map(|n| (n.0, n.1))
            .chain(VERBS.iter().copied())
            .chain(ADJECTIVES.iter().copied())
            .chain(ADVERBS.iter().copied());
        for (lemma, level) in levels {
            assert_eq!(graded.word_level(lemma), level, "{lemma}");
        }
    }

    #[test]
    fn conjugation() {
        assert_eq!(verb_form("regarder", Base::Pres), "regarde");
        assert_eq!(verb_form("regarder", Base::Cnd), "regarderait");
        assert_eq!(verb_form("regarder", Base::Past), "regarda");
        assert_eq!(participle("visiter", true), "visitée");
        assert_eq!(irregular("être", Base::Sub), "soit");
    }

    #[test]
    fn documents_are_valid_and_deterministic() {
        let cfg = SynthConfig { docs_per_class: 20, seed: 3, ..Default::default() };
        let a = generate_corpus(&cfg);
        assert_eq!(a, generate_corpus(&cfg));
        for d in &a {
            for s in &d.doc.sentences {
                s.check_tree().unwrap();
                let tree = s.const_tree.as_ref().unwrap();
                let forms: Vec<&str> = s.tokens.iter().map(|t| t.form.as_str()).collect();
                assert_eq!(tree.leaves(), forms, "projection must be projective");
            }
        }
    }

    #[test]
    fn written_corpus_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig { docs_per_class: 3, seed: 1, ..Default::default() };
        let docs = generate_corpus(&cfg);
        write_corpus(dir.path(), &docs).unwrap();
        let back = read_conllu_file(&dir.path().join("complex/doc0002.conllu")).unwrap();
        assert_eq!(back[0], docs[4].doc);
        let planted = read_planted(&dir.path().join("planted.tsv")).unwrap();
        assert_eq!(planted.len(), 6);
        assert_eq!(planted["complex/doc0002"], docs[4].planted_simplicity);
    }

    #[test]
    fn difficulty_drives_indicators() {
        let lex = Lexicons::builtin();
        let mean = |d: f64| {
            let mut acc = vec![0.0; crate::N_FEATURES];
            for i in 0..40 {
                let doc = generate_document("x", d, &SynthConfig::default(), &mut rng::seeded(i));
                let f = extract_features(&doc, &lex).features;
                for (a, v) in acc.iter_mut().zip(f.as_slice()) {
                    *a += v / 40.0;
                }
            }
            acc
        };
        let easy = mean(0.1);
        let hard = mean(0.9);
        // Rates are per 100 words, and hard sentences are about three times
        // longer, so only constructions injected often enough rise per word.
        for name in [
            "lexical_difficulty",
            "acronym_rate",
            "words_per_sentence",
            "mean_dependency_tree_height",
            "mean_constituency_tree_height",
            "relative_clause_rate",
            "apposition_rate",
            "passive_rate",
            "complex_tense_rate",
            "conditional_mood_rate",
            "complex_np_rate",
            "complex_connective_rate",
            "temporal_break_rate",
        ] {
            let j = crate::indicators::FEATURE_NAMES.iter().position(|n| *n == name).unwrap();
            assert!(hard[j] > easy[j], "{name}: {} vs {}", hard[j], easy[j]);
        }
    }
}
