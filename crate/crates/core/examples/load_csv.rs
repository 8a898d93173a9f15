//! Read a dataset from CSV, once with inferred feature kinds and once with
//! a schema that forces a column to be nominal.

use covermine::model::FeatureKind;
use covermine::persist::{dataset_digest, read_dataset, Schema};

const CSV: &str = "\
id,lang,size,priority,causes
I1,java,10,1,C1
I2,java,3,2,C1;C2
I3,python,4,2,C2
I4,c,12,3,C2
I5,java,9,1,
";

pub fn main() {
    let inferred = read_dataset(CSV.as_bytes(), None).unwrap();
    let schema = Schema::from([("priority".to_string(), FeatureKind::Nominal)]);
    let typed = read_dataset(CSV.as_bytes(), Some(&schema)).unwrap();
    for (label, data) in [("inferred", &inferred), ("schema", &typed)] {
        let kinds: Vec<String> = data
            .features()
            .iter()
            .map(|f| format!("{}:{:?}", f.name, f.kind))
            .collect();
        println!("{label:<9} {} records, {} causes, {}", data.len(), data.cause_count(), kinds.join(" "));
        println!("          digest {}", &dataset_digest(data)[..16]);
    }

    let labelled = "id,x,label\na,1,T\nb,2,F\nc,3,T\n";
    let data = read_dataset(labelled.as_bytes(), None).unwrap();
    println!("label column gives causes {:?}", data.causes());
}
