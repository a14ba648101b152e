//! Writing and reading CMTX tensor containers.

use comix::tensor_io::{read_container, write_container, DType, TensorContainer};

fn main() -> comix::Result<()> {
    let values: Vec<f32> = (0..12).map(|v| v as f32 * 0.25).collect();
    let tensor = TensorContainer::from_f32(vec![3, 4], &values)?;
    let bytes = write_container(&tensor);

    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    println!("magic   {:?}", std::str::from_utf8(&bytes[..4]).unwrap());
    println!("header  {}", std::str::from_utf8(&bytes[8..8 + header_len]).unwrap());
    println!("payload {} bytes", bytes.len() - 8 - header_len);

    let back = read_container(&bytes)?;
    assert_eq!(back.dtype(), DType::F32);
    println!("shape   {:?}, first row {:?}", back.shape(), &back.to_f64_vec()[..4]);

    let bad = read_container(&bytes[..bytes.len() - 3]);
    println!("truncated -> {}", bad.unwrap_err());
    Ok(())
}
