use std::collections::{BTreeMap, BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use super::{Feature, FeatureKind, ModelError, Operator, Proposition, Record, Rule, RuleSet, Value};

/// Column storage. Nominal values are dictionary-encoded.
#[derive(Debug, Clone)]
pub enum Column {
    Nominal { codes: Vec<u32>, dict: Vec<String> },
    Numeric(Vec<f64>),
}

/// Records with typed features and record→cause links.
///
/// Immutable; every mutation returns a new dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<Feature>,
    feature_index: HashMap<String, usize>,
    columns: Vec<Column>,
    lookups: Vec<HashMap<String, u32>>,
    sorted_values: Vec<Vec<f64>>,
    ids: Vec<String>,
    id_index: HashMap<String, usize>,
    causes: Vec<String>,
    record_causes: Vec<Vec<u32>>,
    cause_records: Vec<Vec<u32>>,
    declared: BTreeSet<String>,
    computed: BTreeSet<String>,
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidDataset(msg.into())
}

impl Dataset {
    pub fn new(features: Vec<Feature>, records: Vec<Record>) -> Result<Self, ModelError> {
        Self::build(features, records, BTreeSet::new(), BTreeSet::new())
    }

    /// Like [`Dataset::new`], with causes that exist even without linked records.
    pub fn with_declared_causes(
        features: Vec<Feature>,
        records: Vec<Record>,
        declared: impl IntoIterator<Item = String>,
    ) -> Result<Self, ModelError> {
        Self::build(features, records, declared.into_iter().collect(), BTreeSet::new())
    }

    fn build(
        features: Vec<Feature>,
        records: Vec<Record>,
        declared: BTreeSet<String>,
        computed: BTreeSet<String>,
    ) -> Result<Self, ModelError> {
        let mut feature_index = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if feature_index.insert(f.name.clone(), i).is_some() {
                return Err(invalid(format!("duplicate feature `{}`", f.name)));
            }
        }
        let mut id_index = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if id_index.insert(r.id.clone(), i).is_some() {
                return Err(invalid(format!("duplicate record id `{}`", r.id)));
            }
            if r.values.len() != features.len() {
                if let Some(extra) = r.values.keys().find(|k| !feature_index.contains_key(*k)) {
                    return Err(invalid(format!("record `{}` has unknown feature `{extra}`", r.id)));
                }
                let missing = features.iter().find(|f| !r.values.contains_key(&f.name)).unwrap();
                return Err(invalid(format!(
                    "record `{}` has no value for `{}`",
                    r.id, missing.name
                )));
            }
        }

        let mut columns = Vec::with_capacity(features.len());
        let mut lookups = Vec::with_capacity(features.len());
        let mut sorted_values = Vec::with_capacity(features.len());
        for f in &features {
            let missing = || invalid(format!("missing value for `{}`", f.name));
            match f.kind {
                FeatureKind::Nominal => {
                    let mut lookup: HashMap<String, u32> = HashMap::new();
                    let mut dict = Vec::new();
                    let mut codes = Vec::with_capacity(records.len());
                    for r in &records {
                        let s = match r.values.get(&f.name).ok_or_else(missing)? {
                            Value::Nominal(s) => s,
                            Value::Numeric(_) => {
                                return Err(invalid(format!(
                                    "record `{}`: `{}` is nominal but has a numeric value",
                                    r.id, f.name
                                )))
                            }
                        };
                        let code = *lookup.entry(s.clone()).or_insert_with(|| {
                            dict.push(s.clone());
                            (dict.len() - 1) as u32
                        });
                        codes.push(code);
                    }
                    columns.push(Column::Nominal { codes, dict });
                    lookups.push(lookup);
                    sorted_values.push(Vec::new());
                }
                FeatureKind::Numeric => {
                    let mut col = Vec::with_capacity(records.len());
                    for r in &records {
                        let x = match r.values.get(&f.name).ok_or_else(missing)? {
                            Value::Numeric(x) => *x,
                            Value::Nominal(_) => {
                                return Err(invalid(format!(
                                    "record `{}`: `{}` is numeric but has a nominal value",
                                    r.id, f.name
                                )))
                            }
                        };
                        if !x.is_finite() && !computed.contains(&f.name) {
                            return Err(invalid(format!(
                                "record `{}`: `{}` is not finite",
                                r.id, f.name
                            )));
                        }
                        col.push(if x == 0.0 { 0.0 } else { x });
                    }
                    let mut sorted: Vec<f64> = col.iter().copied().filter(|x| x.is_finite()).collect();
                    sorted.sort_by(f64::total_cmp);
                    sorted.dedup();
                    columns.push(Column::Numeric(col));
                    lookups.push(HashMap::new());
                    sorted_values.push(sorted);
                }
            }
        }

        let mut cause_names: BTreeSet<String> = declared.clone();
        for r in &records {
            cause_names.extend(r.causes.iter().cloned());
        }
        let causes: Vec<String> = cause_names.into_iter().collect();
        let cause_index: HashMap<&str, u32> = causes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let mut cause_records = vec![Vec::new(); causes.len()];
        let record_causes: Vec<Vec<u32>> = records
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                r.causes
                    .iter()
                    .map(|c| {
                        let ci = cause_index[c.as_str()];
                        cause_records[ci as usize].push(ri as u32);
                        ci
                    })
                    .collect()
            })
            .collect();

        Ok(Dataset {
            features,
            feature_index,
            columns,
            lookups,
            sorted_values,
            ids: records.into_iter().map(|r| r.id).collect(),
            id_index,
            causes,
            record_causes,
            cause_records,
            declared,
            computed,
        })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_index.get(name).copied()
    }

    pub fn column(&self, feature: usize) -> &Column {
        &self.columns[feature]
    }

    /// Distinct finite values of a numeric feature, ascending. Empty for nominal features.
    pub fn sorted_values(&self, feature: usize) -> &[f64] {
        &self.sorted_values[feature]
    }

    pub fn is_computed(&self, name: &str) -> bool {
        self.computed.contains(name)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn causes(&self) -> &[String] {
        &self.causes
    }

    pub fn cause_count(&self) -> usize {
        self.causes.len()
    }

    /// Cause indices linked to a record.
    pub fn record_causes(&self, row: usize) -> &[u32] {
        &self.record_causes[row]
    }

    /// Record indices linked to a cause.
    pub fn cause_records(&self, cause: usize) -> &[u32] {
        &self.cause_records[cause]
    }

    pub fn is_positive(&self, row: usize) -> bool {
        !self.record_causes[row].is_empty()
    }

    pub fn value(&self, row: usize, feature: usize) -> Value {
        match &self.columns[feature] {
            Column::Nominal { codes, dict } => Value::Nominal(dict[codes[row] as usize].clone()),
            Column::Numeric(col) => Value::Numeric(col[row]),
        }
    }

    pub fn record_at(&self, row: usize) -> Record {
        Record {
            id: self.ids[row].clone(),
            values: self
                .features
                .iter()
                .enumerate()
                .map(|(fi, f)| (f.name.clone(), self.value(row, fi)))
                .collect(),
            causes: self.record_causes[row]
                .iter()
                .map(|&c| self.causes[c as usize].clone())
                .collect(),
        }
    }

    pub fn record(&self, id: &str) -> Option<Record> {
        self.index_of(id).map(|row| self.record_at(row))
    }

    pub fn records(&self) -> impl Iterator<Item = Record> + '_ {
        (0..self.len()).map(|row| self.record_at(row))
    }

    fn resolve(&self, p: &Proposition) -> Result<usize, ModelError> {
        let fi = self
            .feature_index(p.feature())
            .ok_or_else(|| ModelError::UnknownFeature(p.feature().to_string()))?;
        if self.features[fi].kind != p.op().kind() {
            return Err(ModelError::KindMismatch {
                feature: p.feature().to_string(),
                op: p.op(),
                kind: self.features[fi].kind,
            });
        }
        Ok(fi)
    }

    /// Tests one proposition against one row (the proposition must be valid for the schema).
    pub fn holds(&self, p: &Proposition, feature: usize, row: usize) -> bool {
        match (&self.columns[feature], p.value()) {
            (Column::Nominal { codes, .. }, Value::Nominal(s)) => {
                let code = self.lookups[feature].get(s);
                match p.op() {
                    Operator::Equals => code == Some(&codes[row]),
                    _ => code != Some(&codes[row]),
                }
            }
            (Column::Numeric(col), Value::Numeric(a)) => match p.op() {
                Operator::LessOrEqual => col[row] <= *a,
                _ => col[row] >= *a,
            },
            _ => false,
        }
    }

    pub fn proposition_bits(&self, p: &Proposition) -> Result<FixedBitSet, ModelError> {
        let fi = self.resolve(p)?;
        let mut bits = FixedBitSet::with_capacity(self.len());
        match (&self.columns[fi], p.value()) {
            (Column::Nominal { codes, .. }, Value::Nominal(s)) => {
                let code = self.lookups[fi].get(s).copied();
                let eq = p.op() == Operator::Equals;
                for (row, c) in codes.iter().enumerate() {
                    if (Some(*c) == code) == eq {
                        bits.insert(row);
                    }
                }
            }
            (Column::Numeric(col), Value::Numeric(a)) => {
                let le = p.op() == Operator::LessOrEqual;
                for (row, x) in col.iter().enumerate() {
                    if (le && *x <= *a) || (!le && *x >= *a) {
                        bits.insert(row);
                    }
                }
            }
            _ => unreachable!("kinds checked by resolve"),
        }
        Ok(bits)
    }

    pub fn rule_bits(&self, rule: &Rule) -> Result<FixedBitSet, ModelError> {
        let mut props = rule.propositions().iter();
        let mut bits = self.proposition_bits(props.next().expect("rules are nonempty"))?;
        for p in props {
            bits.intersect_with(&self.proposition_bits(p)?);
        }
        Ok(bits)
    }

    fn union_bits(&self, rules: &[Rule]) -> Result<FixedBitSet, ModelError> {
        let mut bits = FixedBitSet::with_capacity(self.len());
        for r in rules {
            bits.union_with(&self.rule_bits(r)?);
        }
        Ok(bits)
    }

    /// Records matched by at least one inclusion rule (exclusions ignored).
    pub fn inclusion_bits(&self, rs: &RuleSet) -> Result<FixedBitSet, ModelError> {
        self.union_bits(&rs.inclusions)
    }

    /// Records selected by the ruleset.
    pub fn match_bits(&self, rs: &RuleSet) -> Result<FixedBitSet, ModelError> {
        // validate everything before matching
        rs.rules()
            .flat_map(|(_, r)| r.propositions())
            .try_for_each(|p| self.resolve(p).map(|_| ()))?;
        let mut bits = self.union_bits(&rs.inclusions)?;
        if !rs.exclusions.is_empty() {
            bits.difference_with(&self.union_bits(&rs.exclusions)?);
        }
        Ok(bits)
    }

    pub fn validate_ruleset(&self, rs: &RuleSet) -> Result<(), ModelError> {
        rs.validate(&self.features)
    }

    fn rebuild(&self, records: Vec<Record>) -> Result<Dataset, ModelError> {
        Self::build(
            self.features.clone(),
            records,
            self.declared.clone(),
            self.computed.clone(),
        )
    }

    /// A copy keeping only rows whose bit is not set in `remove`.
    pub fn without_rows(&self, remove: &FixedBitSet) -> Result<Dataset, ModelError> {
        let records = (0..self.len())
            .filter(|row| !remove.contains(*row))
            .map(|row| self.record_at(row))
            .collect();
        self.rebuild(records)
    }

    /// A copy with the cause links of one record replaced.
    pub fn relabeled(&self, id: &str, causes: BTreeSet<String>) -> Result<Dataset, ModelError> {
        let row = self
            .index_of(id)
            .ok_or_else(|| invalid(format!("unknown record `{id}`")))?;
        let records = (0..self.len())
            .map(|r| {
                let mut rec = self.record_at(r);
                if r == row {
                    rec.causes = causes.clone();
                }
                rec
            })
            .collect();
        self.rebuild(records)
    }

    /// A copy with one more (computed) column; numeric values may be NaN.
    pub fn with_computed_column(
        &self,
        feature: Feature,
        values: Vec<Value>,
    ) -> Result<Dataset, ModelError> {
        if self.feature_index.contains_key(&feature.name) {
            return Err(invalid(format!("feature `{}` already exists", feature.name)));
        }
        if values.len() != self.len() {
            return Err(invalid("computed column has the wrong length"));
        }
        let records = (0..self.len())
            .zip(values)
            .map(|(row, v)| {
                let mut rec = self.record_at(row);
                rec.values.insert(feature.name.clone(), v);
                rec
            })
            .collect();
        let mut features = self.features.clone();
        let mut computed = self.computed.clone();
        computed.insert(feature.name.clone());
        features.push(feature);
        Self::build(features, records, self.declared.clone(), computed)
    }

    /// Base (non-computed) features and record values, used by snapshots.
    pub fn base_parts(&self) -> (Vec<Feature>, Vec<Record>) {
        let features: Vec<Feature> = self
            .features
            .iter()
            .filter(|f| !self.computed.contains(&f.name))
            .cloned()
            .collect();
        let records = self
            .records()
            .map(|mut r| {
                r.values.retain(|k, _| !self.computed.contains(k));
                r
            })
            .collect();
        (features, records)
    }

    pub fn declared_causes(&self) -> &BTreeSet<String> {
        &self.declared
    }

    /// Per-record cause names, keyed by record id.
    pub fn cause_map(&self) -> BTreeMap<String, BTreeSet<String>> {
        (0..self.len())
            .map(|row| {
                (
                    self.ids[row].clone(),
                    self.record_causes[row]
                        .iter()
                        .map(|&c| self.causes[c as usize].clone())
                        .collect(),
                )
            })
            .collect()
    }
}
